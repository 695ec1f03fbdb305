#include "nrt/hist.hpp"

#include <cmath>

namespace nrt {

Hist1D::Hist1D(std::string name, uint32_t nbins, double lo, double hi)
    : name_(std::move(name)), lo_(lo), hi_(hi), contents_(nbins, 0.0), sumw2_(nbins, 0.0) {
    if (nbins == 0) fail(Errc::malformed, "histogram needs at least one bin");
    if (!(lo < hi)) fail(Errc::malformed, "histogram needs lo < hi");
}

Hist1D::Hist1D(std::string name) : name_(std::move(name)) {}

int Hist1D::fill(double x, double w) {
    if (label_mode_) fail(Errc::label_mode_mismatch, "numeric fill on label histogram '" + name_ + "'");
    if (contents_.empty()) fail(Errc::malformed, "histogram '" + name_ + "' has no binning");
    entries_ += 1;
    int n = static_cast<int>(contents_.size());
    int bin;
    if (x < lo_) {
        bin = -1;
    } else if (x >= hi_) {
        bin = n;
    } else {
        bin = static_cast<int>(std::floor(n * (x - lo_) / (hi_ - lo_)));
        if (bin < 0) bin = 0;
        if (bin >= n) bin = n; // fp edge: ratio rounding up to 1
    }
    if (bin < 0) {
        underflow_ += w;
    } else if (bin >= n) {
        overflow_ += w;
    } else {
        contents_[bin] += w;
        sumw2_[bin] += w * w;
    }
    return bin;
}

int Hist1D::fill_label(std::string_view label, double w) {
    if (!label_mode_) {
        if (entries_ != 0 || !contents_.empty())
            fail(Errc::numeric_mode_mismatch, "label fill on numeric histogram '" + name_ + "'");
        label_mode_ = true;
    }
    entries_ += 1;
    auto bin = label_bin(label);
    if (!bin) {
        labels_.emplace_back(label);
        contents_.push_back(0.0);
        sumw2_.push_back(0.0);
        bin = static_cast<uint32_t>(labels_.size() - 1);
    }
    contents_[*bin] += w;
    sumw2_[*bin] += w * w;
    return static_cast<int>(*bin);
}

std::optional<uint32_t> Hist1D::label_bin(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] == label) return static_cast<uint32_t>(i);
    return std::nullopt;
}

double Hist1D::label_content(std::string_view label) const {
    auto bin = label_bin(label);
    return bin ? contents_[*bin] : 0.0;
}

double Hist1D::total_weight() const {
    double total = underflow_ + overflow_;
    for (double c : contents_) total += c;
    return total;
}

bool Hist1D::compatible_with(const Hist1D& other) const {
    if (label_mode_ != other.label_mode_) return false;
    if (label_mode_) return true; // merged by label name, sets may differ
    return contents_.size() == other.contents_.size() && lo_ == other.lo_ && hi_ == other.hi_;
}

void Hist1D::add(const Hist1D& other) {
    if (!compatible_with(other))
        fail(Errc::incompatible_binning, "cannot add '" + other.name_ + "' to '" + name_ + "'");
    if (label_mode_) {
        for (std::size_t i = 0; i < other.labels_.size(); ++i) {
            auto bin = label_bin(other.labels_[i]);
            if (!bin) {
                labels_.push_back(other.labels_[i]);
                contents_.push_back(0.0);
                sumw2_.push_back(0.0);
                bin = static_cast<uint32_t>(labels_.size() - 1);
            }
            contents_[*bin] += other.contents_[i];
            sumw2_[*bin] += other.sumw2_[i];
        }
    } else {
        for (std::size_t i = 0; i < contents_.size(); ++i) {
            contents_[i] += other.contents_[i];
            sumw2_[i] += other.sumw2_[i];
        }
    }
    underflow_ += other.underflow_;
    overflow_ += other.overflow_;
    entries_ += other.entries_;
}

const TypeDescriptor& hist_descriptor() {
    static const TypeDescriptor desc = TypeDescriptor::make(
        "nrt.Hist1D", 1,
        {FieldDescriptor::scalar("name", FieldKind::String),
         FieldDescriptor::scalar("nbins", FieldKind::Int64),
         FieldDescriptor::scalar("lo", FieldKind::Float64),
         FieldDescriptor::scalar("hi", FieldKind::Float64),
         FieldDescriptor::sequence("contents", "Float64"),
         FieldDescriptor::sequence("sumw2", "Float64"),
         FieldDescriptor::scalar("under", FieldKind::Float64),
         FieldDescriptor::scalar("over", FieldKind::Float64),
         FieldDescriptor::scalar("entries", FieldKind::Int64),
         FieldDescriptor::sequence("labels", "String")});
    return desc;
}

DynamicRecord Hist1D::to_record(SchemaRegistry& registry) const {
    registry.register_type(hist_descriptor());
    DynamicRecord rec("nrt.Hist1D", 1);
    rec.set("name", Value(name_));
    rec.set("nbins", Value(static_cast<int64_t>(contents_.size())));
    rec.set("lo", Value(lo_));
    rec.set("hi", Value(hi_));
    Value::List contents, sumw2, labels;
    for (double c : contents_) contents.push_back(Value(c));
    for (double s : sumw2_) sumw2.push_back(Value(s));
    for (const auto& l : labels_) labels.push_back(Value(l));
    rec.set("contents", Value(std::move(contents)));
    rec.set("sumw2", Value(std::move(sumw2)));
    rec.set("under", Value(underflow_));
    rec.set("over", Value(overflow_));
    rec.set("entries", Value(static_cast<int64_t>(entries_)));
    rec.set("labels", Value(std::move(labels)));
    return rec;
}

Hist1D Hist1D::from_record(const DynamicRecord& record) {
    if (record.type_name != "nrt.Hist1D")
        fail(Errc::type_mismatch, "expected nrt.Hist1D, got '" + record.type_name + "'");
    Hist1D h;
    h.name_ = record.at("name").as_string();
    auto nbins = static_cast<std::size_t>(record.at("nbins").as_int());
    h.lo_ = record.at("lo").as_f64();
    h.hi_ = record.at("hi").as_f64();
    for (const auto& v : record.at("contents").as_list()) h.contents_.push_back(v.as_f64());
    for (const auto& v : record.at("sumw2").as_list()) h.sumw2_.push_back(v.as_f64());
    h.underflow_ = record.at("under").as_f64();
    h.overflow_ = record.at("over").as_f64();
    h.entries_ = static_cast<uint64_t>(record.at("entries").as_int());
    for (const auto& v : record.at("labels").as_list()) h.labels_.push_back(v.as_string());
    h.label_mode_ = !h.labels_.empty();
    if (h.contents_.size() != nbins || h.sumw2_.size() != nbins)
        fail(Errc::malformed, "histogram record bin counts disagree");
    if (h.label_mode_ && h.labels_.size() != nbins)
        fail(Errc::malformed, "histogram record label count disagrees");
    return h;
}

Hist1D merge(std::span<const Hist1D> hists) {
    if (hists.empty()) fail(Errc::incompatible_binning, "merge needs at least one histogram");
    Hist1D out = hists[0];
    for (std::size_t i = 1; i < hists.size(); ++i) out.add(hists[i]);
    return out;
}

void HistStack::add(Hist1D h) {
    if (!members_.empty() && !members_.front().compatible_with(h))
        fail(Errc::incompatible_binning,
             "stack member '" + h.name() + "' does not match '" + members_.front().name() + "'");
    members_.push_back(std::move(h));
}

std::vector<Hist1D> stack_totals(const HistStack& stack, bool nostack) {
    if (nostack) return stack.members();
    std::vector<Hist1D> out;
    out.reserve(stack.members().size());
    for (const auto& member : stack.members()) {
        if (out.empty()) {
            out.push_back(member);
        } else {
            Hist1D cum = out.back();
            cum.add(member);
            cum.set_name(member.name());
            out.push_back(std::move(cum));
        }
    }
    return out;
}

} // namespace nrt
