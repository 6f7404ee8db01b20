#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace saia {

struct Sample {
    std::string id;
    std::vector<double> features;
    std::optional<int> label;
};

/// Ordered collection of samples sharing one feature arity and class count.
/// Ids are unique; either every sample is labeled or none is.
class Dataset {
public:
    Dataset(int class_count, int feature_count);

    void add(Sample sample);

    int class_count() const noexcept { return class_count_; }
    int feature_count() const noexcept { return feature_count_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    bool labeled() const noexcept { return !samples_.empty() && samples_.front().label.has_value(); }

    const Sample& operator[](std::size_t i) const { return samples_[i]; }
    std::span<const Sample> samples() const noexcept { return samples_; }
    auto begin() const noexcept { return samples_.begin(); }
    auto end() const noexcept { return samples_.end(); }

    const Sample* find(const std::string& id) const;
    std::vector<int> labels() const;

private:
    int class_count_;
    int feature_count_;
    std::vector<Sample> samples_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Per-class probabilities of one classifier for one sample.
class PosteriorVector {
public:
    static constexpr double kSumTolerance = 1e-6;

    explicit PosteriorVector(std::vector<double> probs);

    std::span<const double> probs() const noexcept { return probs_; }
    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }

    bool operator==(const PosteriorVector&) const = default;

private:
    std::vector<double> probs_;
};

struct SplitSpec {
    double train_fraction = 0.8;
    double meta_fraction = 0.05;
    double test_fraction = 0.15;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DatasetSplit {
    Dataset train;
    Dataset meta;
    Dataset test;
};

Dataset parse_dataset_csv(std::istream& in, int class_count);
Dataset load_dataset_csv(const std::string& path, int class_count);
std::string dataset_to_csv(const Dataset& ds);
void save_dataset_csv(const Dataset& ds, const std::string& path);

/// Stratified, seeded three-way split. Every class is apportioned so that its
/// count in each partition is within one sample of its exact share, and the
/// partition totals are the largest-remainder rounding of the fractions.
DatasetSplit split_dataset(const Dataset& ds, const SplitSpec& spec);

/// Samples of `ds` whose ids appear in `reference`, in `reference` order.
Dataset select_like(const Dataset& ds, const Dataset& reference);

/// Smallest index attaining the maximum.
int argmax_class(std::span<const double> scores);
inline int argmax_class(const PosteriorVector& p) { return argmax_class(p.probs()); }

}  // namespace saia
