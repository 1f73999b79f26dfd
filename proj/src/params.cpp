#include "fedphish/params.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fedphish/errors.hpp"
#include "fedphish/kernels.hpp"

namespace fedphish {

void ParamSet::add(std::string name, Tensor tensor) {
    if (has(name)) throw UsageError("paramset: duplicate entry name '" + name + "'");
    entries_.push_back(Entry{std::move(name), std::move(tensor)});
}

bool ParamSet::has(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

const Tensor& ParamSet::at(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e.tensor;
    throw UsageError("paramset: no entry named '" + name + "'");
}

Tensor& ParamSet::at(const std::string& name) {
    for (auto& e : entries_)
        if (e.name == name) return e.tensor;
    throw UsageError("paramset: no entry named '" + name + "'");
}

std::int64_t ParamSet::total_values() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
}

bool ParamSet::shape_compatible(const ParamSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != other.entries_[i].name) return false;
        if (entries_[i].tensor.shape() != other.entries_[i].tensor.shape()) return false;
    }
    return true;
}

ParamSet ParamSet::zeros_like(const ParamSet& ref) {
    ParamSet out;
    for (const auto& e : ref.entries_) out.add(e.name, Tensor::zeros(e.tensor.shape()));
    out.version_ = ref.version_;
    return out;
}

void ParamSet::fill(double value) {
    for (auto& e : entries_)
        for (auto& v : e.tensor.values()) v = value;
}

void ParamSet::add_scaled(const ParamSet& other, double alpha) {
    if (!shape_compatible(other))
        throw DimensionError("paramset add_scaled: incompatible parameter sets");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        kernels::axpy(alpha, other.entries_[i].tensor.data(), entries_[i].tensor.data(),
                      entries_[i].tensor.size());
    }
}

void ParamSet::scale(double alpha) {
    for (auto& e : entries_)
        kernels::scale(alpha, e.tensor.data(), e.tensor.data(), e.tensor.size());
}

void ParamSet::assign(const ParamSet& other) {
    if (!shape_compatible(other))
        throw DimensionError("paramset assign: incompatible parameter sets");
    for (std::size_t i = 0; i < entries_.size(); ++i)
        entries_[i].tensor.values() = other.entries_[i].tensor.values();
}

double ParamSet::max_abs_difference(const ParamSet& other) const {
    if (!shape_compatible(other))
        throw DimensionError("paramset max_abs_difference: incompatible parameter sets");
    double mx = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i].tensor.values();
        const auto& b = other.entries_[i].tensor.values();
        for (std::size_t j = 0; j < a.size(); ++j)
            mx = std::max(mx, std::fabs(a[j] - b[j]));
    }
    return mx;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw DataError(context + ": not a number: '" + s + "'");
    return v;
}

namespace {

constexpr const char* kMagic = "fedphish-params";
constexpr int kFormatVersion = 1;

std::string next_line(std::istream& is, const char* what) {
    std::string line;
    if (!std::getline(is, line)) throw DataError(std::string("params: truncated document, expected ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace

void write_params(std::ostream& os, const ParamSet& params) {
    os << kMagic << " " << kFormatVersion << "\n";
    os << "version " << params.version() << "\n";
    os << "entries " << params.size() << "\n";
    for (const auto& e : params.entries()) {
        os << "entry " << e.name << " " << e.tensor.rank();
        for (auto d : e.tensor.shape()) os << " " << d;
        os << "\n";
        const auto& vals = e.tensor.values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i) os << " ";
            os << format_double(vals[i]);
        }
        os << "\n";
    }
}

ParamSet read_params(std::istream& is) {
    std::istringstream hdr(next_line(is, "header"));
    std::string magic;
    int fmt = 0;
    hdr >> magic >> fmt;
    if (magic != kMagic) throw DataError("params: bad magic '" + magic + "'");
    if (fmt != kFormatVersion)
        throw DataError("params: unsupported format version " + std::to_string(fmt));

    std::istringstream vline(next_line(is, "version"));
    std::string key;
    std::int64_t version = 0;
    vline >> key >> version;
    if (key != "version") throw DataError("params: expected 'version' line");

    std::istringstream eline(next_line(is, "entry count"));
    std::size_t count = 0;
    eline >> key >> count;
    if (key != "entries") throw DataError("params: expected 'entries' line");

    ParamSet out;
    out.set_version(version);
    for (std::size_t i = 0; i < count; ++i) {
        std::istringstream head(next_line(is, "entry header"));
        std::string name;
        std::int64_t rank = 0;
        head >> key >> name >> rank;
        if (key != "entry" || name.empty() || rank < 0)
            throw DataError("params: malformed entry header for entry " + std::to_string(i));
        std::vector<std::int64_t> shape(static_cast<std::size_t>(rank));
        for (auto& d : shape) {
            if (!(head >> d)) throw DataError("params: missing dimension in entry '" + name + "'");
        }
        const std::int64_t n = shape_product(shape);
        std::vector<double> vals(static_cast<std::size_t>(n));
        std::istringstream body(next_line(is, "entry values"));
        std::string tok;
        for (std::int64_t j = 0; j < n; ++j) {
            if (!(body >> tok))
                throw DataError("params: entry '" + name + "' has fewer than " +
                                std::to_string(n) + " values");
            vals[static_cast<std::size_t>(j)] = parse_double(tok, "params entry '" + name + "'");
        }
        if (body >> tok)
            throw DataError("params: entry '" + name + "' has trailing values");
        out.add(name, Tensor(std::move(shape), std::move(vals)));
    }
    return out;
}

void save_params(const std::string& path, const ParamSet& params) {
    std::ofstream os(path);
    if (!os) throw IoError("params: cannot open '" + path + "' for writing");
    write_params(os, params);
    if (!os) throw IoError("params: write failed for '" + path + "'");
}

ParamSet load_params(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("params: cannot open '" + path + "'");
    return read_params(is);
}

} // namespace fedphish
