#ifndef FEDPHISH_PARAMS_HPP
#define FEDPHISH_PARAMS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fedphish/tensor.hpp"

namespace fedphish {

/// Named, shaped, flat parameter storage for one model. This is the unit
/// exchanged between nodes and the server; entry order is part of the
/// identity (serialization preserves it, arithmetic requires it to match).
class ParamSet {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
    };

    ParamSet() = default;

    void add(std::string name, Tensor tensor);

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const Entry& entry(std::size_t i) const { return entries_[i]; }
    Entry& entry(std::size_t i) { return entries_[i]; }

    const std::vector<Entry>& entries() const { return entries_; }

    bool has(const std::string& name) const;
    const Tensor& at(const std::string& name) const;
    Tensor& at(const std::string& name);

    std::int64_t total_values() const;

    std::int64_t version() const { return version_; }
    void set_version(std::int64_t v) { version_ = v; }

    /// Names, order, and shapes all match.
    bool shape_compatible(const ParamSet& other) const;

    static ParamSet zeros_like(const ParamSet& ref);

    // Element-wise arithmetic across entries. All throw DimensionError on
    // shape-incompatible operands.
    void fill(double value);
    void add_scaled(const ParamSet& other, double alpha); // this += alpha * other
    void scale(double alpha);
    void assign(const ParamSet& other);                   // copy values only

    double max_abs_difference(const ParamSet& other) const;

private:
    std::vector<Entry> entries_;
    std::int64_t version_ = 0;
};

/// Gradients carry one tensor per parameter entry, same structure as the
/// ParamSet they were computed for.
using Gradients = ParamSet;

// Versioned text checkpoint. Values are printed with shortest round-trip
// decimal representation, so serialize -> deserialize is bit-exact.
void write_params(std::ostream& os, const ParamSet& params);
ParamSet read_params(std::istream& is);

void save_params(const std::string& path, const ParamSet& params);
ParamSet load_params(const std::string& path);

std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);

} // namespace fedphish

#endif
