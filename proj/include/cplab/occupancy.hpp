#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cplab/diagram.hpp"

namespace cplab {

enum class FieldKind { sigma_n, eta_n, eta_n_delta };

std::string to_string(FieldKind k);
FieldKind parse_field_kind(const std::string& s);

struct Provenance {
  FieldKind kind = FieldKind::eta_n;
  int n = 0;
  RateParams params = RateParams::from_q(0.5);
  std::optional<double> delta;
  std::uint64_t seed = 0;
};

/// 0/1 configuration on a box.  A cylinder field covers every column of a
/// wrapped box and its columns are periodic.
class OccupancyField {
 public:
  OccupancyField(Rect box, Provenance provenance, bool cylinder = false);

  const Rect& box() const { return box_; }
  bool cylinder() const { return cylinder_; }
  const Provenance& provenance() const { return provenance_; }

  bool operator()(Vertex v) const { return bits_[box_.index(wrap(v))] != 0; }
  void set(Vertex v, bool value) { bits_[box_.index(wrap(v))] = value ? 1 : 0; }
  bool contains(Vertex v) const { return box_.contains(wrap(v)); }
  Vertex wrap(Vertex v) const;

  std::size_t occupied() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const OccupancyField& a, const OccupancyField& b) {
    return a.box_ == b.box_ && a.cylinder_ == b.cylinder_ && a.bits_ == b.bits_;
  }

 private:
  Rect box_;
  Provenance provenance_;
  bool cylinder_;
  std::vector<std::uint8_t> bits_;
};

/// Space-time box that determines the eta^(n) values on `targets`.
SpaceTimeBox occupancy_region(const Rect& targets, int n);

/// eta^(n) on `targets`, evaluated on a shared diagram.
OccupancyField occupancy_from_diagram(const Diagram& d, const Rect& targets, int n,
                                      FieldKind kind = FieldKind::eta_n);

/// Samples the diagram and evaluates eta^(n) on box L, or on `targets` when
/// given.  Only the part of B x [-n, 0] the values depend on is sampled; it is
/// the exact restriction of the full-box diagram with the same seed.
OccupancyField sample_occupancy_field(const GeometryPlan& geometry, const RateParams& params,
                                      std::uint64_t seed,
                                      std::optional<Rect> targets = std::nullopt);

/// Plain PBM (P1) with the provenance as a JSON comment line.
void write_pbm(std::ostream& os, const OccupancyField& f);
OccupancyField read_pbm(std::istream& is);

}  // namespace cplab
