#include "rth/binary_code.hpp"

#include <bit>

#include "rth/error.hpp"

namespace rth {

BinaryCode BinaryCode::from_string(std::string_view bits) {
    BinaryCode code(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != '0' && bits[i] != '1') throw DataError("binary code string must contain only 0 and 1");
        code.set(i, bits[i] == '1');
    }
    return code;
}

std::string BinaryCode::to_string() const {
    std::string s(bits_, '0');
    for (std::size_t i = 0; i < bits_; ++i)
        if (get(i)) s[i] = '1';
    return s;
}

int hamming(const BinaryCode& a, const BinaryCode& b) {
    if (a.size() != b.size()) throw DataError("hamming distance needs codes of equal length");
    int d = 0;
    for (std::size_t w = 0; w < a.words().size(); ++w) d += std::popcount(a.words()[w] ^ b.words()[w]);
    return d;
}

}  // namespace rth
