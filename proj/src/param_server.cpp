#include "dsoftmax/param_server.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "dsoftmax/wire.hpp"

namespace dsoftmax {

namespace {
constexpr char kMagic[5] = {'D', 'S', 'P', 'S', '1'};
}

WeightStore::WeightStore(std::size_t num_classes, std::size_t dim,
                         std::size_t num_shards)
    : num_classes_(num_classes), dim_(dim), shard_map_{num_shards} {
  if (num_classes == 0 || dim == 0)
    throw std::invalid_argument("WeightStore: empty shape");
  if (num_shards == 0)
    throw std::invalid_argument("WeightStore: need at least one shard");
  shards_.reserve(num_shards);
  for (std::size_t s = 0; s < num_shards; ++s) {
    auto shard = std::make_unique<Shard>();
    std::size_t rows = shard_rows(s);
    shard->weights.assign(rows * dim_, 0.0);
    shard->versions.assign(rows, 0);
    shards_.push_back(std::move(shard));
  }
}

WeightStore::WeightStore(const Matrix& initial, std::size_t num_shards)
    : WeightStore(initial.rows(), initial.cols(), num_shards) {
  initial.require_finite("WeightStore initial weights");
  for (std::uint64_t id = 0; id < num_classes_; ++id) {
    Shard& shard = *shards_[shard_map_.shard_of(id)];
    double* dst = shard.weights.data() + shard_map_.slot_of(id) * dim_;
    auto src = initial.row(id);
    for (std::size_t k = 0; k < dim_; ++k) dst[k] = src[k];
  }
}

std::size_t WeightStore::shard_rows(std::size_t shard) const {
  // Classes shard, shard + S, shard + 2S, ... below num_classes_.
  if (shard >= num_classes_) return 0;
  return (num_classes_ - shard - 1) / shard_map_.num_shards + 1;
}

void WeightStore::check_id(std::uint64_t id) const {
  if (id >= num_classes_)
    throw std::invalid_argument("WeightStore: unknown class id " +
                                std::to_string(id));
}

std::vector<WeightRecord> WeightStore::fetch(
    std::span<const std::uint64_t> ids) const {
  for (std::uint64_t id : ids) check_id(id);
  std::vector<WeightRecord> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::uint64_t id = ids[i];
    const Shard& shard = *shards_[shard_map_.shard_of(id)];
    const std::size_t slot = shard_map_.slot_of(id);
    WeightRecord& rec = out[i];
    rec.class_id = id;
    rec.weights.resize(dim_);
    std::lock_guard<std::mutex> lock(shard.mu);
    const double* src = shard.weights.data() + slot * dim_;
    for (std::size_t k = 0; k < dim_; ++k) rec.weights[k] = src[k];
    rec.version = shard.versions[slot];
  }
  return out;
}

void WeightStore::fetch_matrix(std::span<const std::uint64_t> ids, Matrix& out,
                               std::vector<std::uint64_t>* versions) const {
  for (std::uint64_t id : ids) check_id(id);
  if (out.rows() != ids.size() || out.cols() != dim_)
    out = Matrix(ids.size(), dim_);
  if (versions) versions->assign(ids.size(), 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::uint64_t id = ids[i];
    const Shard& shard = *shards_[shard_map_.shard_of(id)];
    const std::size_t slot = shard_map_.slot_of(id);
    double* dst = out.row(i).data();
    std::lock_guard<std::mutex> lock(shard.mu);
    const double* src = shard.weights.data() + slot * dim_;
    for (std::size_t k = 0; k < dim_; ++k) dst[k] = src[k];
    if (versions) (*versions)[i] = shard.versions[slot];
  }
}

std::vector<PushOutcome> WeightStore::push_update(
    std::span<const PushRequest> updates) {
  for (const PushRequest& u : updates) {
    check_id(u.class_id);
    if (u.delta.size() != dim_)
      throw std::invalid_argument("WeightStore: delta dimension mismatch for id " +
                                  std::to_string(u.class_id));
    for (double v : u.delta)
      if (!std::isfinite(v))
        throw std::invalid_argument("WeightStore: non-finite delta for id " +
                                    std::to_string(u.class_id));
  }
  std::vector<PushOutcome> out(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    const PushRequest& u = updates[i];
    Shard& shard = *shards_[shard_map_.shard_of(u.class_id)];
    const std::size_t slot = shard_map_.slot_of(u.class_id);
    PushOutcome& res = out[i];
    res.class_id = u.class_id;
    std::lock_guard<std::mutex> lock(shard.mu);
    if (u.expected_version && *u.expected_version != shard.versions[slot]) {
      res.status = PushStatus::StaleRejected;
      res.current_version = shard.versions[slot];
      continue;
    }
    double* dst = shard.weights.data() + slot * dim_;
    for (std::size_t k = 0; k < dim_; ++k) dst[k] += u.delta[k];
    res.status = PushStatus::Applied;
    res.current_version = ++shard.versions[slot];
  }
  return out;
}

Matrix WeightStore::dump() const {
  Matrix out(num_classes_, dim_);
  for (std::uint64_t id = 0; id < num_classes_; ++id) {
    const Shard& shard = *shards_[shard_map_.shard_of(id)];
    const std::size_t slot = shard_map_.slot_of(id);
    double* dst = out.row(id).data();
    std::lock_guard<std::mutex> lock(shard.mu);
    const double* src = shard.weights.data() + slot * dim_;
    for (std::size_t k = 0; k < dim_; ++k) dst[k] = src[k];
  }
  return out;
}

void WeightStore::snapshot(const std::string& path) const {
  std::string buf;
  buf.reserve(5 + 16 + num_classes_ * (16 + dim_ * 8));
  buf.append(kMagic, sizeof(kMagic));
  wire::put_u64(buf, num_classes_);
  wire::put_u64(buf, dim_);
  for (std::uint64_t id = 0; id < num_classes_; ++id) {
    const Shard& shard = *shards_[shard_map_.shard_of(id)];
    const std::size_t slot = shard_map_.slot_of(id);
    std::lock_guard<std::mutex> lock(shard.mu);
    wire::put_u64(buf, id);
    wire::put_u64(buf, shard.versions[slot]);
    const double* src = shard.weights.data() + slot * dim_;
    for (std::size_t k = 0; k < dim_; ++k) wire::put_f64(buf, src[k]);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("WeightStore::snapshot: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out)
    throw std::runtime_error("WeightStore::snapshot: write failed for " + path);
}

WeightStore WeightStore::load(const std::string& path, std::size_t num_shards) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("WeightStore::load: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());

  wire::Reader r(buf);
  if (r.remaining() < sizeof(kMagic) ||
      buf.compare(0, sizeof(kMagic), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("WeightStore::load: bad magic in " + path);
  r.bytes(sizeof(kMagic));

  try {
    const std::uint64_t k = r.u64();
    const std::uint64_t n = r.u64();
    if (k == 0 || n == 0)
      throw std::runtime_error("WeightStore::load: empty shape in " + path);
    WeightStore store(k, n, num_shards);
    for (std::uint64_t i = 0; i < k; ++i) {
      const std::uint64_t id = r.u64();
      if (id != i)
        throw std::runtime_error("WeightStore::load: records out of order in " +
                                 path);
      const std::uint64_t version = r.u64();
      Shard& shard = *store.shards_[store.shard_map_.shard_of(id)];
      const std::size_t slot = store.shard_map_.slot_of(id);
      double* dst = shard.weights.data() + slot * n;
      for (std::uint64_t t = 0; t < n; ++t) {
        double v = r.f64();
        if (!std::isfinite(v))
          throw std::runtime_error("WeightStore::load: non-finite weight in " +
                                   path);
        dst[t] = v;
      }
      shard.versions[slot] = version;
    }
    if (r.remaining() != 0)
      throw std::runtime_error("WeightStore::load: trailing bytes in " + path);
    return store;
  } catch (const wire::ReadError&) {
    throw std::runtime_error("WeightStore::load: truncated file " + path);
  }
}

ClientCache::ClientCache(std::size_t capacity, FetchFn fetch)
    : capacity_(capacity), fetch_(std::move(fetch)) {
  if (capacity_ == 0)
    throw std::invalid_argument("ClientCache: capacity must be > 0");
}

void ClientCache::touch(Entry& e, std::uint64_t id) {
  lru_.erase(e.lru_it);
  lru_.push_front(id);
  e.lru_it = lru_.begin();
}

void ClientCache::insert(WeightRecord record, std::uint64_t now) {
  const std::uint64_t id = record.class_id;
  auto it = entries_.find(id);
  if (it != entries_.end()) {
    it->second.record = std::move(record);
    it->second.fetched_at = now;
    touch(it->second, id);
    return;
  }
  if (entries_.size() >= capacity_) {
    std::uint64_t victim = lru_.back();
    lru_.pop_back();
    entries_.erase(victim);
  }
  lru_.push_front(id);
  Entry e;
  e.record = std::move(record);
  e.fetched_at = now;
  e.lru_it = lru_.begin();
  entries_.emplace(id, std::move(e));
}

std::vector<WeightRecord> ClientCache::get(std::span<const std::uint64_t> ids,
                                           std::uint64_t now,
                                           std::uint64_t max_age) {
  std::vector<WeightRecord> out(ids.size());
  std::vector<std::uint64_t> missing;
  std::vector<std::size_t> missing_pos;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = entries_.find(ids[i]);
    if (it != entries_.end() && now - it->second.fetched_at <= max_age) {
      out[i] = it->second.record;
      touch(it->second, ids[i]);
      ++hits_;
    } else {
      missing.push_back(ids[i]);
      missing_pos.push_back(i);
      ++misses_;
    }
  }
  if (!missing.empty()) {
    std::vector<WeightRecord> fetched = fetch_(missing);
    if (fetched.size() != missing.size())
      throw std::runtime_error("ClientCache: fetch returned wrong record count");
    for (std::size_t i = 0; i < fetched.size(); ++i) {
      out[missing_pos[i]] = fetched[i];
      insert(std::move(fetched[i]), now);
    }
  }
  return out;
}

void ClientCache::clear() {
  entries_.clear();
  lru_.clear();
}

}  // namespace dsoftmax
