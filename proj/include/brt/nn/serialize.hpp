#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "brt/errors.hpp"
#include "brt/nn/graph.hpp"

namespace brt::nn {

inline void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw ConfigError("checkpoint truncated while reading u32");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline void write_u64(std::ostream& os, uint64_t v) {
    write_u32(os, static_cast<uint32_t>(v & 0xffffffffull));
    write_u32(os, static_cast<uint32_t>(v >> 32));
}

inline uint64_t read_u64(std::istream& is) {
    uint64_t lo = read_u32(is);
    uint64_t hi = read_u32(is);
    return lo | (hi << 32);
}

inline void write_f64(std::ostream& os, double v) {
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(&v), 8);
}

inline double read_f64(std::istream& is) {
    double v;
    is.read(reinterpret_cast<char*>(&v), 8);
    if (!is) throw ConfigError("checkpoint truncated while reading f64");
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    uint32_t n = read_u32(is);
    if (n > (1u << 20)) throw ConfigError("checkpoint string length out of range");
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw ConfigError("checkpoint truncated while reading string");
    return s;
}

inline void write_mat(std::ostream& os, const Mat& m) {
    write_u32(os, static_cast<uint32_t>(m.rows()));
    write_u32(os, static_cast<uint32_t>(m.cols()));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) write_f64(os, m(i, j));
}

inline Mat read_mat(std::istream& is) {
    uint32_t r = read_u32(is), c = read_u32(is);
    if (r > (1u << 20) || c > (1u << 20))
        throw ConfigError("checkpoint matrix dimensions out of range");
    Mat m(static_cast<int>(r), static_cast<int>(c));
    for (uint32_t i = 0; i < r; ++i)
        for (uint32_t j = 0; j < c; ++j)
            m(static_cast<int>(i), static_cast<int>(j)) = read_f64(is);
    return m;
}

// Parameter values only; optimizer slots are training state, not model state.
inline void write_params(std::ostream& os, const ParamSet& ps) {
    write_u32(os, static_cast<uint32_t>(ps.items().size()));
    for (const auto& p : ps.items()) {
        write_string(os, p->name);
        write_mat(os, p->value);
    }
}

// The destination set must already hold the architecture's layout; names and
// shapes are verified so a checkpoint cannot silently load into the wrong net.
inline void read_params(std::istream& is, ParamSet& ps) {
    uint32_t n = read_u32(is);
    if (n != ps.items().size()) throw ConfigError("checkpoint parameter count mismatch");
    for (auto& p : ps.items()) {
        std::string name = read_string(is);
        if (name != p->name)
            throw ConfigError("checkpoint parameter '" + name + "' does not match '" +
                              p->name + "'");
        Mat v = read_mat(is);
        if (v.rows() != p->value.rows() || v.cols() != p->value.cols())
            throw ConfigError("checkpoint parameter '" + name + "' has wrong shape");
        p->value = v;
    }
}

} // namespace brt::nn
