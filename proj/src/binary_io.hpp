#pragma once

// Little-endian scalar I/O shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "brc/errors.hpp"

namespace brc::detail {

template <class U>
void put_le(std::ostream& out, U v) {
    unsigned char b[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), sizeof(U));
}

inline void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
inline void put_f32(std::ostream& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

// Reader that names the file and byte offset of any short read.
class LeReader {
public:
    LeReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

    void bytes(void* dst, std::size_t n, const char* what) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError(name_ + ": truncated reading " + what + " at offset " + std::to_string(pos_));
        }
        pos_ += n;
    }

    template <class U>
    U le(const char* what) {
        unsigned char b[sizeof(U)];
        bytes(b, sizeof(U), what);
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
        return v;
    }

    std::uint32_t u32(const char* what) { return le<std::uint32_t>(what); }
    std::uint64_t u64(const char* what) { return le<std::uint64_t>(what); }
    float f32(const char* what) { return std::bit_cast<float>(le<std::uint32_t>(what)); }
    double f64(const char* what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }

    std::size_t offset() const { return pos_; }
    const std::string& name() const { return name_; }
    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    std::istream& in_;
    std::string name_;
    std::size_t pos_ = 0;
};

}  // namespace brc::detail
