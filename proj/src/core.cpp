#include "saia/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

#include "saia/error.hpp"
#include "saia/random.hpp"
#include "saia/text.hpp"

namespace saia {

Dataset::Dataset(int class_count, int feature_count)
    : class_count_(class_count), feature_count_(feature_count) {
    if (class_count <= 0) throw Error(ErrorKind::InvalidArgument, "class_count must be positive");
    if (feature_count <= 0) throw Error(ErrorKind::InvalidArgument, "feature_count must be positive");
}

void Dataset::add(Sample sample) {
    if (static_cast<int>(sample.features.size()) != feature_count_) {
        throw Error(ErrorKind::ArityMismatch, "sample " + sample.id + " has " +
                                                  std::to_string(sample.features.size()) +
                                                  " features, expected " + std::to_string(feature_count_));
    }
    if (sample.label && (*sample.label < 0 || *sample.label >= class_count_)) {
        throw Error(ErrorKind::LabelOutOfRange,
                    "sample " + sample.id + " label " + std::to_string(*sample.label) +
                        " outside [0," + std::to_string(class_count_) + ")");
    }
    if (!samples_.empty() && samples_.front().label.has_value() != sample.label.has_value()) {
        throw Error(ErrorKind::MixedLabels, "sample " + sample.id + " breaks all-or-none labeling");
    }
    auto [it, inserted] = index_.emplace(sample.id, samples_.size());
    if (!inserted) throw Error(ErrorKind::DuplicateId, "duplicate id " + sample.id);
    samples_.push_back(std::move(sample));
}

const Sample* Dataset::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &samples_[it->second];
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) {
        if (!s.label) throw Error(ErrorKind::InvalidArgument, "dataset is unlabeled");
        out.push_back(*s.label);
    }
    return out;
}

PosteriorVector::PosteriorVector(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw Error(ErrorKind::InvalidArgument, "empty posterior vector");
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "probability " + format_double(p) + " outside [0,1]");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw Error(ErrorKind::RowNotNormalized, "posterior sums to " + format_double(sum));
    }
}

void SplitSpec::validate() const {
    if (!(train_fraction > 0 && meta_fraction > 0 && test_fraction > 0)) {
        throw Error(ErrorKind::InvalidArgument, "split fractions must be positive");
    }
    if (std::abs(train_fraction + meta_fraction + test_fraction - 1.0) > 1e-9) {
        throw Error(ErrorKind::InvalidArgument, "split fractions must sum to 1");
    }
}

Dataset parse_dataset_csv(std::istream& in, int class_count) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::MalformedRow, "missing header");
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
        throw Error(ErrorKind::MalformedRow, "header must start with id,label,f0");
    }
    const int d = static_cast<int>(header.size()) - 2;
    for (int j = 0; j < d; ++j) {
        if (header[j + 2] != "f" + std::to_string(j)) {
            throw Error(ErrorKind::MalformedRow, "header column " + std::to_string(j + 2) + " must be f" +
                                                     std::to_string(j));
        }
    }

    Dataset ds(class_count, d);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        const std::string where = "line " + std::to_string(line_no);
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::MalformedRow, where + ": expected " + std::to_string(header.size()) +
                                                     " fields, got " + std::to_string(fields.size()));
        }
        Sample s;
        s.id = std::string(fields[0]);
        if (s.id.empty()) throw Error(ErrorKind::MalformedRow, where + ": empty id");
        if (!fields[1].empty()) {
            auto label = parse_int(fields[1]);
            if (!label) throw Error(ErrorKind::MalformedRow, where + ": non-integer label");
            if (*label < 0 || *label >= class_count) {
                throw Error(ErrorKind::LabelOutOfRange, where + ": label " + std::to_string(*label));
            }
            s.label = static_cast<int>(*label);
        }
        s.features.reserve(d);
        for (int j = 0; j < d; ++j) {
            auto v = parse_double(fields[j + 2]);
            if (!v || !std::isfinite(*v)) throw Error(ErrorKind::MalformedRow, where + ": non-numeric feature");
            s.features.push_back(*v);
        }
        ds.add(std::move(s));
    }
    return ds;
}

Dataset load_dataset_csv(const std::string& path, int class_count) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    return parse_dataset_csv(in, class_count);
}

std::string dataset_to_csv(const Dataset& ds) {
    std::string out = "id,label";
    for (int j = 0; j < ds.feature_count(); ++j) out += ",f" + std::to_string(j);
    out += '\n';
    for (const auto& s : ds) {
        out += s.id;
        out += ',';
        if (s.label) out += std::to_string(*s.label);
        for (double v : s.features) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

void save_dataset_csv(const Dataset& ds, const std::string& path) { write_file(path, dataset_to_csv(ds)); }

namespace {

constexpr int kPartitions = 3;

/// Largest-remainder apportionment of `total` by `shares`; ties go to the lower index.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> shares) {
    std::vector<std::size_t> counts(shares.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < shares.size(); ++p) {
        const double exact = shares[p] * static_cast<double>(total);
        counts[p] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[p];
        remainders.emplace_back(exact - std::floor(exact), p);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[remainders[i % shares.size()].second];
    return counts;
}

/// Bipartite flow distributing the leftover unit of each (class, partition)
/// cell so class totals and partition totals both hold. A solution always
/// exists because partition totals are roundings of the column sums.
class RoundingFlow {
public:
    RoundingFlow(std::vector<long> class_need, std::vector<long> partition_need,
                 std::vector<std::vector<double>> preference)
        : class_need_(std::move(class_need)),
          partition_need_(std::move(partition_need)),
          preference_(std::move(preference)),
          bump_(class_need_.size(), std::vector<int>(kPartitions, 0)) {}

    std::vector<std::vector<int>> solve() {
        for (std::size_t c = 0; c < class_need_.size(); ++c) {
            while (class_need_[c] > 0) {
                std::array<char, kPartitions> visited{};
                if (!augment(c, visited)) throw Error(ErrorKind::EmptyClass, "stratified rounding infeasible");
                --class_need_[c];
            }
        }
        return bump_;
    }

private:
    std::vector<int> partition_order(std::size_t c) const {
        std::vector<int> order(kPartitions);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return preference_[c][a] > preference_[c][b]; });
        return order;
    }

    /// Finds one more unit for class c, possibly moving other classes along an
    /// alternating path. Each partition is visited at most once per search.
    bool augment(std::size_t c, std::array<char, kPartitions>& visited) {
        for (int p : partition_order(c)) {
            if (bump_[c][p] || visited[p]) continue;
            visited[p] = 1;
            if (partition_need_[p] > 0) {
                bump_[c][p] = 1;
                --partition_need_[p];
                return true;
            }
            for (std::size_t other = 0; other < bump_.size(); ++other) {
                if (other == c || !bump_[other][p]) continue;
                bump_[other][p] = 0;
                if (augment(other, visited)) {
                    bump_[c][p] = 1;
                    return true;
                }
                bump_[other][p] = 1;
            }
        }
        return false;
    }

    std::vector<long> class_need_;
    std::vector<long> partition_need_;
    std::vector<std::vector<double>> preference_;
    std::vector<std::vector<int>> bump_;
};

}  // namespace

DatasetSplit split_dataset(const Dataset& ds, const SplitSpec& spec) {
    spec.validate();
    if (ds.empty()) throw Error(ErrorKind::InvalidArgument, "cannot split an empty dataset");
    if (!ds.labeled()) throw Error(ErrorKind::InvalidArgument, "split requires a labeled dataset");

    const std::array<double, kPartitions> shares{spec.train_fraction, spec.meta_fraction, spec.test_fraction};
    const int m = ds.class_count();

    std::vector<std::vector<std::size_t>> by_class(m);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[*ds[i].label].push_back(i);

    const auto totals = apportion(ds.size(), shares);
    std::vector<std::vector<int>> counts(m, std::vector<int>(kPartitions, 0));
    std::vector<long> class_need(m, 0);
    std::vector<long> partition_need(totals.begin(), totals.end());
    std::vector<std::vector<double>> preference(m, std::vector<double>(kPartitions, 0.0));
    for (int c = 0; c < m; ++c) {
        long floors = 0;
        for (int p = 0; p < kPartitions; ++p) {
            const double exact = shares[p] * static_cast<double>(by_class[c].size());
            counts[c][p] = static_cast<int>(std::floor(exact));
            preference[c][p] = exact - std::floor(exact);
            floors += counts[c][p];
            partition_need[p] -= counts[c][p];
        }
        class_need[c] = static_cast<long>(by_class[c].size()) - floors;
    }
    const auto bump = RoundingFlow(class_need, partition_need, preference).solve();

    std::vector<int> assignment(ds.size(), -1);
    for (int c = 0; c < m; ++c) {
        if (by_class[c].empty()) continue;
        std::vector<std::size_t> members = by_class[c];
        Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(c)));
        rng.shuffle(std::span<std::size_t>(members));
        std::size_t cursor = 0;
        for (int p = 0; p < kPartitions; ++p) {
            const int n = counts[c][p] + bump[c][p];
            if (n == 0) {
                throw Error(ErrorKind::EmptyClass, "class " + std::to_string(c) + " has " +
                                                       std::to_string(by_class[c].size()) +
                                                       " samples, too few to populate every partition");
            }
            for (int k = 0; k < n; ++k) assignment[members[cursor++]] = p;
        }
    }

    DatasetSplit out{Dataset(m, ds.feature_count()), Dataset(m, ds.feature_count()), Dataset(m, ds.feature_count())};
    for (std::size_t i = 0; i < ds.size(); ++i) {
        Dataset& target = assignment[i] == 0 ? out.train : assignment[i] == 1 ? out.meta : out.test;
        target.add(ds[i]);
    }
    return out;
}

Dataset select_like(const Dataset& ds, const Dataset& reference) {
    Dataset out(ds.class_count(), ds.feature_count());
    for (const auto& ref : reference) {
        const Sample* s = ds.find(ref.id);
        if (!s) throw Error(ErrorKind::MissingPrediction, "id " + ref.id + " not present");
        out.add(*s);
    }
    return out;
}

int argmax_class(std::span<const double> scores) {
    if (scores.empty()) throw Error(ErrorKind::InvalidArgument, "argmax of empty score list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return static_cast<int>(best);
}

}  // namespace saia
