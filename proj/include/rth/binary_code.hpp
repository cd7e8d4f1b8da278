#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rth {

// Fixed-length bit string packed into 64-bit words; bit i lives in word
// i / 64 at position i % 64. Unused high bits of the last word stay zero.
class BinaryCode {
public:
    BinaryCode() = default;
    explicit BinaryCode(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

    // Parses a string of '0'/'1' characters; character 0 is bit 0.
    static BinaryCode from_string(std::string_view bits);

    std::size_t size() const noexcept { return bits_; }
    const std::vector<std::uint64_t>& words() const noexcept { return words_; }
    std::vector<std::uint64_t>& words() noexcept { return words_; }

    bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
    void set(std::size_t i, bool value) {
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (value)
            words_[i >> 6] |= mask;
        else
            words_[i >> 6] &= ~mask;
    }

    std::string to_string() const;

    bool operator==(const BinaryCode&) const = default;

private:
    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

// Popcount of the XOR; throws DataError on length mismatch.
int hamming(const BinaryCode& a, const BinaryCode& b);

}  // namespace rth
