#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace objcomp {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Axis-aligned box in meters.
struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
};

using SegmentId = int;
/// Sorted, duplicate-free list of segment ids. Used as the fingerprint of an object hypothesis.
using SegmentSet = std::vector<SegmentId>;

enum class Location { table, red_box, green_box, removed };

std::string_view to_string(Location loc);
Location location_from_string(std::string_view s);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-length bit vector with value semantics and a total order.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t size, bool value = false)
      : words_((size + 63) / 64, value ? ~std::uint64_t{0} : 0), size_(size) {
    trim();
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool operator[](std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  bool test(std::size_t i) const { return (*this)[i]; }
  void set(std::size_t i, bool v = true) {
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= bit;
    else
      words_[i >> 6] &= ~bit;
  }
  void reset() { std::fill(words_.begin(), words_.end(), 0); }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool any() const {
    for (auto w : words_)
      if (w) return true;
    return false;
  }
  bool intersects(const Bitset& o) const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & o.words_[k]) return true;
    return false;
  }
  /// True iff (this & other & ~exclude) is non-empty.
  bool intersects_except(const Bitset& o, const Bitset& exclude) const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & o.words_[k] & ~exclude.words_[k]) return true;
    return false;
  }
  std::size_t intersection_count(const Bitset& o) const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < words_.size(); ++k)
      c += static_cast<std::size_t>(std::popcount(words_[k] & o.words_[k]));
    return c;
  }
  Bitset& operator|=(const Bitset& o) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= o.words_[k];
    return *this;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull ^ size_;
    for (auto w : words_) h = (h ^ w) * 0x100000001b3ull + (h >> 29);
    return h;
  }

  bool operator==(const Bitset& o) const = default;
  /// Lexicographic over bit positions, bit 0 most significant.
  std::strong_ordering operator<=>(const Bitset& o) const;

  /// "0110..." with bit 0 first.
  std::string to_string() const;
  static Bitset from_string(std::string_view s);

  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  void trim() {
    if (size_ % 64 != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
  }

  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

struct BitsetHash {
  std::size_t operator()(const Bitset& b) const { return static_cast<std::size_t>(b.hash()); }
};

/// One indicator per candidate edge.
using EdgeAssignment = Bitset;
/// One bit per dense segment index of a scene.
using SegmentMask = Bitset;

std::uint64_t hash_segment_set(const SegmentSet& s);

}  // namespace objcomp
