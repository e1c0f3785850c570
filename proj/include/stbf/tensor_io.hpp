#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stbf {
namespace tensor_io {

// Shared binary tensor container: magic "STBT", uint32 flags (bit 0 set for
// complex payload), uint32 ndim, ndim x uint64 dims, then row-major
// little-endian float64 payload (complex entries interleaved re/im).

struct Tensor {
    bool is_complex = false;
    std::vector<uint64_t> dims;
    std::vector<double> data;  // complex: 2x element count, interleaved

    uint64_t element_count() const {
        uint64_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

inline void save(const std::string& path, const Tensor& t) {
    if (t.data.size() != t.element_count() * (t.is_complex ? 2 : 1))
        throw std::invalid_argument("tensor_io: payload size inconsistent with dims");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("tensor_io: cannot open for writing: " + path);
    os.write("STBT", 4);
    const uint32_t flags = t.is_complex ? 1u : 0u;
    const uint32_t ndim = static_cast<uint32_t>(t.dims.size());
    os.write(reinterpret_cast<const char*>(&flags), 4);
    os.write(reinterpret_cast<const char*>(&ndim), 4);
    for (uint64_t d : t.dims) os.write(reinterpret_cast<const char*>(&d), 8);
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!os) throw std::runtime_error("tensor_io: write failed: " + path);
}

inline Tensor load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("tensor_io: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "STBT", 4) != 0)
        throw std::runtime_error("tensor_io: bad magic: " + path);
    uint32_t flags = 0, ndim = 0;
    is.read(reinterpret_cast<char*>(&flags), 4);
    is.read(reinterpret_cast<char*>(&ndim), 4);
    if (!is || ndim > 8) throw std::runtime_error("tensor_io: bad header: " + path);
    Tensor t;
    t.is_complex = (flags & 1u) != 0;
    t.dims.resize(ndim);
    for (auto& d : t.dims) is.read(reinterpret_cast<char*>(&d), 8);
    t.data.resize(t.element_count() * (t.is_complex ? 2 : 1));
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("tensor_io: truncated payload: " + path);
    return t;
}

}  // namespace tensor_io
}  // namespace stbf
