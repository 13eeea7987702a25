#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsoftmax/matrix.hpp"

namespace dsoftmax {

struct ShardMap {
  std::size_t num_shards = 1;
  std::size_t shard_of(std::uint64_t class_id) const {
    return static_cast<std::size_t>(class_id % num_shards);
  }
  // Index within the owning shard's contiguous storage.
  std::size_t slot_of(std::uint64_t class_id) const {
    return static_cast<std::size_t>(class_id / num_shards);
  }
};

struct WeightRecord {
  std::uint64_t class_id = 0;
  std::vector<double> weights;
  std::uint64_t version = 0;
};

enum class PushStatus { Applied, StaleRejected };

struct PushOutcome {
  std::uint64_t class_id = 0;
  PushStatus status = PushStatus::Applied;
  std::uint64_t current_version = 0;
};

struct PushRequest {
  std::uint64_t class_id = 0;
  std::vector<double> delta;
  // Versioned push when set: applied only if it matches the stored version.
  // Absent = blind push, applied unconditionally.
  std::optional<std::uint64_t> expected_version;
};

// Sharded, versioned store for the K x n class-weight matrix. Reads and
// writes are atomic per record; writes within a shard are serialized by the
// shard's mutex, and shards never contend with one another.
class WeightStore {
 public:
  WeightStore(const Matrix& initial, std::size_t num_shards);
  WeightStore(std::size_t num_classes, std::size_t dim, std::size_t num_shards);

  std::size_t num_classes() const { return num_classes_; }
  std::size_t dim() const { return dim_; }
  std::size_t num_shards() const { return shard_map_.num_shards; }

  std::vector<WeightRecord> fetch(std::span<const std::uint64_t> ids) const;
  // Same read path as fetch, but writes rows straight into a matrix.
  void fetch_matrix(std::span<const std::uint64_t> ids, Matrix& out,
                    std::vector<std::uint64_t>* versions = nullptr) const;

  std::vector<PushOutcome> push_update(std::span<const PushRequest> updates);

  // Binary snapshot: magic "DSPS1", K u64 LE, n u64 LE, then K records of
  // [class_id u64, version u64, n x f64], in class-id order.
  void snapshot(const std::string& path) const;
  static WeightStore load(const std::string& path, std::size_t num_shards);

  // Whole store as a K x n matrix (versions ignored).
  Matrix dump() const;

 private:
  struct Shard {
    mutable std::mutex mu;
    std::vector<double> weights;         // slot-major contiguous rows
    std::vector<std::uint64_t> versions; // per slot
  };

  void check_id(std::uint64_t id) const;
  std::size_t shard_rows(std::size_t shard) const;

  std::size_t num_classes_ = 0;
  std::size_t dim_ = 0;
  ShardMap shard_map_;
  std::vector<std::unique_ptr<Shard>> shards_;
};

// Read-through LRU cache in front of a fetch function. Gradients are never
// cached (pushes bypass it); entries carry the step they were fetched at so a
// staleness budget can bound reuse.
class ClientCache {
 public:
  using FetchFn =
      std::function<std::vector<WeightRecord>(std::span<const std::uint64_t>)>;

  ClientCache(std::size_t capacity, FetchFn fetch);

  // Entries older than max_age steps (now - fetched_at > max_age) are
  // refetched. max_age 0 means only entries fetched this step are reused.
  std::vector<WeightRecord> get(std::span<const std::uint64_t> ids,
                                std::uint64_t now, std::uint64_t max_age);

  void clear();
  std::size_t size() const { return entries_.size(); }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  struct Entry {
    WeightRecord record;
    std::uint64_t fetched_at = 0;
    std::list<std::uint64_t>::iterator lru_it;
  };

  void touch(Entry& e, std::uint64_t id);
  void insert(WeightRecord record, std::uint64_t now);

  std::size_t capacity_;
  FetchFn fetch_;
  std::list<std::uint64_t> lru_;  // front = most recent
  std::unordered_map<std::uint64_t, Entry> entries_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace dsoftmax
