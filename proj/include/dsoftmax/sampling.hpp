#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsoftmax/rng.hpp"

namespace dsoftmax {

enum class SampleSetKind {
  FullClasses,   // every class participates in the inter term
  ClassSubset,   // D-Softmax-K: sampled negatives, batch labels excluded
  BatchSubset,   // D-Softmax-B: the inter term runs on a subset of batch rows
  RandEntangled, // Rand-Softmax / Rand-ArcFace: sampled classes + all labels
};

const char* to_string(SampleSetKind kind);
SampleSetKind sample_set_kind_from_string(const std::string& name);

struct SampleSet {
  SampleSetKind kind = SampleSetKind::FullClasses;
  std::vector<std::uint64_t> class_indices;  // sorted, unique
  std::vector<std::size_t> batch_rows;       // sorted, unique (BatchSubset only)
  double rate = 1.0;
};

// Uniform sample of round(rate * (K - |unique labels|)) classes outside the
// batch labels; rate 1 returns the whole complement. A sample size of zero is
// an error (the inter objective would vanish).
SampleSet sample_classes_K(std::uint64_t num_classes,
                           std::span<const std::uint64_t> batch_labels,
                           double rate, RngState& rng);

// Uniform subset of batch rows of size max(1, round(rate * B)).
SampleSet sample_batch_B(std::size_t batch_size, double rate, RngState& rng);

// Batch labels plus a uniform sample of non-label classes; total size is
// round(rate * K) when that exceeds the label count, otherwise just the
// labels (entangled losses need every row's positive present).
SampleSet sample_rand_entangled(std::uint64_t num_classes,
                                std::span<const std::uint64_t> batch_labels,
                                double rate, RngState& rng);

// round-half-up with a floor of zero; set sizes round this way throughout.
std::uint64_t round_sample_size(double x);

}  // namespace dsoftmax
