#include "rankroute/common.hpp"

#include <fstream>
#include <sstream>

namespace rr {

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::string fingerprint_hex(std::string_view bytes) { return to_hex(fingerprint64(bytes)); }

std::string fingerprint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file for fingerprint: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return fingerprint_hex(ss.str());
}

}  // namespace rr
