#include "objcomp/types.hpp"

#include "objcomp/rng.hpp"

namespace objcomp {

std::string_view to_string(Location loc) {
  switch (loc) {
    case Location::table: return "table";
    case Location::red_box: return "red_box";
    case Location::green_box: return "green_box";
    case Location::removed: return "removed";
  }
  return "table";
}

Location location_from_string(std::string_view s) {
  if (s == "table") return Location::table;
  if (s == "red_box") return Location::red_box;
  if (s == "green_box") return Location::green_box;
  if (s == "removed") return Location::removed;
  throw Error("unknown location '" + std::string(s) + "'");
}

std::strong_ordering Bitset::operator<=>(const Bitset& o) const {
  const std::size_t n = std::min(size_, o.size_);
  for (std::size_t i = 0; i < n; ++i) {
    const bool a = (*this)[i], b = o[i];
    if (a != b) return a ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  return size_ <=> o.size_;
}

std::string Bitset::to_string() const {
  std::string s(size_, '0');
  for (std::size_t i = 0; i < size_; ++i)
    if ((*this)[i]) s[i] = '1';
  return s;
}

Bitset Bitset::from_string(std::string_view s) {
  Bitset b(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '1')
      b.set(i);
    else if (s[i] != '0')
      throw Error("bitset string must contain only '0' and '1'");
  }
  return b;
}

std::uint64_t hash_segment_set(const SegmentSet& s) {
  std::uint64_t h = splitmix64(s.size());
  for (auto id : s) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(id)));
  return h;
}

}  // namespace objcomp
