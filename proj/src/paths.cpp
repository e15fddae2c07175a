#include "ssmp/paths.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <cstdio>

namespace ssmp {

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

void PointSeries::push_back(std::span<const double> x) {
    if (x.size() != dim_) throw std::invalid_argument("point dimension mismatch");
    data_.insert(data_.end(), x.begin(), x.end());
}

void PointSeries::push_zero() { data_.insert(data_.end(), dim_, 0.0); }

std::size_t grid_intervals(double horizon, double step) {
    if (!(step > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("horizon and step must be positive");
    if (step > horizon * (1.0 + 1e-12)) throw std::invalid_argument("step exceeds horizon");
    const double ratio = horizon / step;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * ratio) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::ceil(ratio));
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_comment(std::ostream& out, const std::string& comment) {
    std::istringstream lines(comment);
    std::string line;
    while (std::getline(lines, line)) out << "# " << line << '\n';
}

void put_f64(std::ostream& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

double get_f64(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("truncated SSMP binary");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

constexpr char kMagic[4] = {'S', 'S', 'M', 'P'};
constexpr unsigned char kVersion = 1;

}  // namespace

void write_csv(std::ostream& out, const SsmpPath& path, const std::string& comment) {
    out << "# ssmp-path alpha=" << fmt_double(path.alpha) << " step=" << fmt_double(path.step)
        << " absorption=" << (path.absorption ? fmt_double(*path.absorption) : std::string("none")) << '\n';
    write_comment(out, comment);
    out << 't';
    for (std::size_t i = 0; i < path.dim(); ++i) out << ",x" << i + 1;
    out << ",alive\n";
    for (std::size_t k = 0; k < path.size(); ++k) {
        out << fmt_double(path.time(k));
        for (double v : path.values[k]) out << ',' << fmt_double(v);
        out << ',' << (path.alive_at(k) ? 1 : 0) << '\n';
    }
}

SsmpPath read_csv(std::istream& in) {
    SsmpPath path;
    std::string line;
    bool have_meta = false;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# ssmp-path ", 0) == 0) {
                std::istringstream meta(line.substr(12));
                std::string field;
                while (meta >> field) {
                    const auto eq = field.find('=');
                    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
                    if (key == "alpha") path.alpha = std::stod(value);
                    else if (key == "step") path.step = std::stod(value);
                    else if (key == "absorption" && value != "none") path.absorption = std::stod(value);
                }
                have_meta = true;
            }
            continue;
        }
        if (line[0] == 't') {
            std::size_t commas = 0;
            for (char c : line) commas += c == ',';
            dim = commas - 1;
            path.values = PointSeries(dim);
            continue;
        }
        if (!have_meta || dim == 0) throw std::runtime_error("CSV path is missing its header");
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');  // time column is implied by the grid
        Point x(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            if (!std::getline(row, cell, ',')) throw std::runtime_error("short CSV row");
            x[i] = std::stod(cell);
        }
        path.values.push_back(x);
    }
    return path;
}

void write_binary(std::ostream& out, const SsmpPath& path) {
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));
    put_f64(out, static_cast<double>(path.dim()));
    put_f64(out, path.alpha);
    put_f64(out, path.step);
    put_f64(out, static_cast<double>(path.size()));
    put_f64(out, path.absorption ? *path.absorption : std::numeric_limits<double>::quiet_NaN());
    for (double v : path.values.data()) put_f64(out, v);
}

SsmpPath read_binary(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not an SSMP binary path");
    const int version = in.get();
    if (version != kVersion) throw std::runtime_error("unsupported SSMP binary version");
    SsmpPath path;
    const auto dim = static_cast<std::size_t>(get_f64(in));
    path.alpha = get_f64(in);
    path.step = get_f64(in);
    const auto count = static_cast<std::size_t>(get_f64(in));
    const double absorption = get_f64(in);
    if (!std::isnan(absorption)) path.absorption = absorption;
    path.values = PointSeries(dim);
    path.values.reserve(count);
    Point x(dim);
    for (std::size_t k = 0; k < count; ++k) {
        for (auto& v : x) v = get_f64(in);
        path.values.push_back(x);
    }
    return path;
}

void write_csv(std::ostream& out, const MapPath& path, const std::string& comment) {
    out << "# map-path step=" << fmt_double(path.step)
        << " lifetime=" << (path.lifetime ? fmt_double(*path.lifetime) : std::string("none")) << '\n';
    write_comment(out, comment);
    out << 't';
    if (path.finite_state()) out << ",state";
    for (std::size_t i = 0; i < path.theta.dim(); ++i) out << ",theta" << i + 1;
    out << ",xi,alive\n";
    for (std::size_t k = 0; k < path.size(); ++k) {
        const bool alive = path.alive_at(k);
        out << fmt_double(path.time(k));
        if (path.finite_state()) out << ',' << (alive ? std::to_string(path.state[k]) : std::string("nan"));
        for (double v : path.theta[k]) out << ',' << fmt_double(v);
        out << ',' << fmt_double(path.xi[k]) << ',' << (alive ? 1 : 0) << '\n';
    }
}

}  // namespace ssmp
