#include "dsoftmax/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace dsoftmax {

const char* to_string(SampleSetKind kind) {
  switch (kind) {
    case SampleSetKind::FullClasses: return "FullClasses";
    case SampleSetKind::ClassSubset: return "ClassSubset";
    case SampleSetKind::BatchSubset: return "BatchSubset";
    case SampleSetKind::RandEntangled: return "RandEntangled";
  }
  return "?";
}

SampleSetKind sample_set_kind_from_string(const std::string& name) {
  if (name == "FullClasses") return SampleSetKind::FullClasses;
  if (name == "ClassSubset") return SampleSetKind::ClassSubset;
  if (name == "BatchSubset") return SampleSetKind::BatchSubset;
  if (name == "RandEntangled") return SampleSetKind::RandEntangled;
  throw std::invalid_argument("unknown sampler kind: " + name);
}

std::uint64_t round_sample_size(double x) {
  if (x <= 0.0) return 0;
  return static_cast<std::uint64_t>(std::floor(x + 0.5));
}

namespace {

void check_rate(double rate) {
  if (!(rate > 0.0) || rate > 1.0)
    throw std::invalid_argument("sampling rate must be in (0, 1]");
}

std::vector<std::uint64_t> unique_sorted(std::span<const std::uint64_t> values) {
  std::vector<std::uint64_t> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// v-th smallest element of [0, K) \ excluded (excluded sorted ascending).
std::uint64_t nth_excluded(std::span<const std::uint64_t> excluded,
                           std::uint64_t v) {
  std::uint64_t ans = v;
  for (std::uint64_t e : excluded) {
    if (e <= ans) ++ans;
    else break;
  }
  return ans;
}

// Floyd's algorithm: `count` distinct values uniform over [0, universe).
std::vector<std::uint64_t> sample_distinct(std::uint64_t universe,
                                           std::uint64_t count, RngState& rng) {
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(count * 2);
  for (std::uint64_t j = universe - count; j < universe; ++j) {
    std::uint64_t t = rng.next_below(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

// `count` distinct classes uniform over [0, K) \ labels.
std::vector<std::uint64_t> sample_complement(std::uint64_t num_classes,
                                             std::span<const std::uint64_t> labels,
                                             std::uint64_t count, RngState& rng) {
  const std::uint64_t candidates = num_classes - labels.size();
  if (count >= candidates) {
    std::vector<std::uint64_t> out;
    out.reserve(candidates);
    std::size_t li = 0;
    for (std::uint64_t c = 0; c < num_classes; ++c) {
      if (li < labels.size() && labels[li] == c) { ++li; continue; }
      out.push_back(c);
    }
    return out;
  }
  std::vector<std::uint64_t> picks = sample_distinct(candidates, count, rng);
  for (std::uint64_t& p : picks) p = nth_excluded(labels, p);
  return picks;  // nth_excluded is monotone, so the result stays sorted
}

}  // namespace

SampleSet sample_classes_K(std::uint64_t num_classes,
                           std::span<const std::uint64_t> batch_labels,
                           double rate, RngState& rng) {
  check_rate(rate);
  std::vector<std::uint64_t> labels = unique_sorted(batch_labels);
  for (std::uint64_t l : labels)
    if (l >= num_classes)
      throw std::invalid_argument("sample_classes_K: label out of range");
  const std::uint64_t candidates = num_classes - labels.size();
  const std::uint64_t target =
      rate == 1.0 ? candidates : round_sample_size(rate * static_cast<double>(candidates));
  if (target == 0)
    throw std::invalid_argument(
        "sample_classes_K: rate yields an empty negative set");

  SampleSet set;
  set.kind = SampleSetKind::ClassSubset;
  set.rate = rate;
  set.class_indices = sample_complement(num_classes, labels, target, rng);
  return set;
}

SampleSet sample_batch_B(std::size_t batch_size, double rate, RngState& rng) {
  check_rate(rate);
  if (batch_size == 0) throw std::invalid_argument("sample_batch_B: empty batch");
  std::uint64_t target =
      rate == 1.0 ? batch_size
                  : std::max<std::uint64_t>(
                        1, round_sample_size(rate * static_cast<double>(batch_size)));

  SampleSet set;
  set.kind = SampleSetKind::BatchSubset;
  set.rate = rate;
  if (target >= batch_size) {
    set.batch_rows.resize(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) set.batch_rows[i] = i;
  } else {
    for (std::uint64_t r : sample_distinct(batch_size, target, rng))
      set.batch_rows.push_back(static_cast<std::size_t>(r));
  }
  return set;
}

SampleSet sample_rand_entangled(std::uint64_t num_classes,
                                std::span<const std::uint64_t> batch_labels,
                                double rate, RngState& rng) {
  check_rate(rate);
  std::vector<std::uint64_t> labels = unique_sorted(batch_labels);
  if (labels.empty())
    throw std::invalid_argument("sample_rand_entangled: no batch labels");
  for (std::uint64_t l : labels)
    if (l >= num_classes)
      throw std::invalid_argument("sample_rand_entangled: label out of range");

  SampleSet set;
  set.kind = SampleSetKind::RandEntangled;
  set.rate = rate;

  const std::uint64_t total_target =
      rate == 1.0 ? num_classes : round_sample_size(rate * static_cast<double>(num_classes));
  if (total_target <= labels.size()) {
    set.class_indices = std::move(labels);
    return set;
  }
  std::vector<std::uint64_t> extra = sample_complement(
      num_classes, labels, total_target - labels.size(), rng);
  set.class_indices.reserve(labels.size() + extra.size());
  std::merge(labels.begin(), labels.end(), extra.begin(), extra.end(),
             std::back_inserter(set.class_indices));
  return set;
}

}  // namespace dsoftmax
