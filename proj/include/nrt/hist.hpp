#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nrt/record.hpp"
#include "nrt/schema.hpp"

namespace nrt {

// A 1-D weighted histogram. Bins are half-open [lo_i, hi_i); x = hi lands in
// overflow. A histogram is either numeric-range or label-keyed, never both:
// the first fill_label on an empty histogram switches it to label mode.
class Hist1D {
public:
    Hist1D() = default;
    Hist1D(std::string name, uint32_t nbins, double lo, double hi);

    // Label-ready: bins appear as labels are first seen.
    explicit Hist1D(std::string name);

    // Returns the filled bin, -1 for underflow, nbins for overflow.
    int fill(double x, double w = 1.0);

    // Unseen labels are appended as new bins, in first-seen order.
    int fill_label(std::string_view label, double w = 1.0);

    const std::string& name() const { return name_; }
    uint32_t nbins() const { return static_cast<uint32_t>(contents_.size()); }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    bool label_mode() const { return label_mode_; }
    const std::vector<std::string>& labels() const { return labels_; }

    double content(uint32_t bin) const { return contents_.at(bin); }
    double sumw2(uint32_t bin) const { return sumw2_.at(bin); }
    double underflow() const { return underflow_; }
    double overflow() const { return overflow_; }
    uint64_t entries() const { return entries_; }

    const std::vector<double>& contents() const { return contents_; }
    const std::vector<double>& sumw2s() const { return sumw2_; }

    std::optional<uint32_t> label_bin(std::string_view label) const;
    double label_content(std::string_view label) const;

    // Sum of contents + underflow + overflow.
    double total_weight() const;

    // Same binning (numeric) or both label-keyed.
    bool compatible_with(const Hist1D& other) const;

    void add(const Hist1D& other); // bin-wise (numeric) or by-label sum

    void set_name(std::string name) { name_ = std::move(name); }

    // Record type "nrt.Hist1D" v1; descriptor registered on demand.
    DynamicRecord to_record(SchemaRegistry& registry) const;
    static Hist1D from_record(const DynamicRecord& record);

    bool operator==(const Hist1D&) const = default;

private:
    std::string name_;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::vector<double> contents_;
    std::vector<double> sumw2_;
    double underflow_ = 0.0;
    double overflow_ = 0.0;
    uint64_t entries_ = 0;
    bool label_mode_ = false;
    std::vector<std::string> labels_;
};

const TypeDescriptor& hist_descriptor();

// Bin-wise (or by-label) sum of all inputs. Throws IncompatibleBinning on
// mismatched binning or mixed modes; needs at least one input.
Hist1D merge(std::span<const Hist1D> hists);

// An ordered collection of histograms rendered as running sums.
class HistStack {
public:
    explicit HistStack(std::string name) : name_(std::move(name)) {}

    // Throws IncompatibleBinning if the member does not match the first.
    void add(Hist1D h);

    const std::string& name() const { return name_; }
    const std::vector<Hist1D>& members() const { return members_; }

private:
    std::string name_;
    std::vector<Hist1D> members_;
};

// k-th output = bin-wise sum of members 0..k. With nostack set, returns the
// members unchanged.
std::vector<Hist1D> stack_totals(const HistStack& stack, bool nostack = false);

} // namespace nrt
