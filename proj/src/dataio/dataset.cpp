#include "brt/dataio/dataset.hpp"

#include <cstdint>
#include <fstream>

namespace brt::dataio {

namespace {

constexpr char kMagic[8] = {'B', 'T', 'D', 'A', 'T', 'A', '1', '\n'};

void put_u32(std::ostream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_i32(std::ostream& os, int32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_str(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t get_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

int32_t get_i32(std::istream& is) {
    int32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

std::string get_str(std::istream& is) {
    uint32_t n = get_u32(is);
    if (n > (1u << 20)) throw ConfigError("dataset: implausible string length");
    std::string s(n, '\0');
    is.read(s.data(), n);
    return s;
}

} // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
    ds.market.check_shapes();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw NoDataError("cannot write dataset file " + path);
    os.write(kMagic, sizeof(kMagic));

    const auto& mt = ds.market;
    const auto& mp = ds.macro;
    if (mp.T() != mt.T())
        throw MisalignedPanelsError("save_dataset: macro and market lengths differ");

    put_u32(os, static_cast<uint32_t>(mt.T()));
    put_u32(os, static_cast<uint32_t>(mt.I()));
    put_u32(os, static_cast<uint32_t>(mt.F()));
    put_u32(os, static_cast<uint32_t>(mp.M()));

    for (const Date& d : mt.dates) put_i32(os, d.serial());
    for (const auto& s : mt.tickers) put_str(os, s);
    for (const auto& s : mt.features) put_str(os, s);
    for (const auto& s : mp.names) put_str(os, s);

    for (int i = 0; i < mt.I(); ++i)
        for (int t = 0; t < mt.T(); ++t)
            for (int f = 0; f < mt.F(); ++f) put_f64(os, mt.values[i](t, f));
    for (int i = 0; i < mt.I(); ++i)
        for (int t = 0; t < mt.T(); ++t)
            for (int f = 0; f < mt.F(); ++f)
                os.put(mt.mask[i](t, f) ? '\1' : '\0');

    for (int t = 0; t < mp.T(); ++t)
        for (int m = 0; m < mp.M(); ++m) put_f64(os, mp.values(t, m));
    for (int t = 0; t < mp.T(); ++t)
        for (int m = 0; m < mp.M(); ++m) os.put(mp.mask(t, m) ? '\1' : '\0');
    bool have_scale = mp.scale.size() == mp.M();
    os.put(have_scale ? '\1' : '\0');
    if (have_scale)
        for (int m = 0; m < mp.M(); ++m) put_f64(os, mp.scale(m));

    if (!os) throw NoDataError("short write to dataset file " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw NoDataError("cannot read dataset file " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::string(magic, 8) != std::string(kMagic, 8))
        throw ConfigError("not a dataset file: " + path);

    Dataset ds;
    auto& mt = ds.market;
    auto& mp = ds.macro;
    uint32_t T = get_u32(is), I = get_u32(is), F = get_u32(is), M = get_u32(is);
    if (!is || T > (1u << 24) || I > (1u << 16) || F > (1u << 16) || M > (1u << 16))
        throw ConfigError("dataset header out of range in " + path);

    for (uint32_t t = 0; t < T; ++t) mt.dates.emplace_back(get_i32(is));
    for (uint32_t i = 0; i < I; ++i) mt.tickers.push_back(get_str(is));
    for (uint32_t f = 0; f < F; ++f) mt.features.push_back(get_str(is));
    for (uint32_t m = 0; m < M; ++m) mp.names.push_back(get_str(is));

    for (uint32_t i = 0; i < I; ++i) {
        Mat v(T, F);
        for (uint32_t t = 0; t < T; ++t)
            for (uint32_t f = 0; f < F; ++f) v(t, f) = get_f64(is);
        mt.values.push_back(std::move(v));
    }
    for (uint32_t i = 0; i < I; ++i) {
        BoolMat b(T, F);
        for (uint32_t t = 0; t < T; ++t)
            for (uint32_t f = 0; f < F; ++f) b(t, f) = is.get() == '\1';
        mt.mask.push_back(std::move(b));
    }

    mp.dates = mt.dates;
    mp.values = Mat(T, M);
    mp.mask = BoolMat(T, M);
    for (uint32_t t = 0; t < T; ++t)
        for (uint32_t m = 0; m < M; ++m) mp.values(t, m) = get_f64(is);
    for (uint32_t t = 0; t < T; ++t)
        for (uint32_t m = 0; m < M; ++m) mp.mask(t, m) = is.get() == '\1';
    if (is.get() == '\1') {
        mp.scale = Eigen::VectorXd(M);
        for (uint32_t m = 0; m < M; ++m) mp.scale(m) = get_f64(is);
    }

    if (!is) throw ConfigError("truncated dataset file " + path);
    mt.check_shapes();
    return ds;
}

} // namespace brt::dataio
