#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string_view>

namespace dcsim {

enum class Resource : std::uint8_t { Power, Air, Liquid, Tiles };

inline constexpr std::array<Resource, 4> kAllResources{Resource::Power, Resource::Air,
                                                        Resource::Liquid, Resource::Tiles};

inline constexpr std::string_view to_string(Resource r) {
  switch (r) {
    case Resource::Power: return "power";
    case Resource::Air: return "air";
    case Resource::Liquid: return "liquid";
    case Resource::Tiles: return "tiles";
  }
  return "?";
}

/// Ledger quantities live on a 2^-10 grid. Sums and differences of grid values
/// (and halves/quarters of them) are exact in double precision, so incremental
/// ledgers and from-scratch recomputation agree bit for bit.
inline constexpr double kQuantum = 1.0 / 1024.0;

inline double quantize(double v) { return std::round(v / kQuantum) * kQuantum; }

/// Demand or capacity across the four placement dimensions:
/// power (kW), air cooling (CFM), liquid cooling (LPM) and floor tiles.
struct ResourceVector {
  double power = 0.0;
  double air = 0.0;
  double liquid = 0.0;
  double tiles = 0.0;

  constexpr double operator[](Resource r) const {
    switch (r) {
      case Resource::Power: return power;
      case Resource::Air: return air;
      case Resource::Liquid: return liquid;
      case Resource::Tiles: return tiles;
    }
    return 0.0;
  }

  constexpr double& operator[](Resource r) {
    switch (r) {
      case Resource::Air: return air;
      case Resource::Liquid: return liquid;
      case Resource::Tiles: return tiles;
      case Resource::Power: break;
    }
    return power;
  }

  constexpr ResourceVector& operator+=(const ResourceVector& o) {
    power += o.power;
    air += o.air;
    liquid += o.liquid;
    tiles += o.tiles;
    return *this;
  }

  constexpr ResourceVector& operator-=(const ResourceVector& o) {
    power -= o.power;
    air -= o.air;
    liquid -= o.liquid;
    tiles -= o.tiles;
    return *this;
  }

  constexpr ResourceVector& operator*=(double s) {
    power *= s;
    air *= s;
    liquid *= s;
    tiles *= s;
    return *this;
  }

  friend constexpr ResourceVector operator+(ResourceVector a, const ResourceVector& b) { return a += b; }
  friend constexpr ResourceVector operator-(ResourceVector a, const ResourceVector& b) { return a -= b; }
  friend constexpr ResourceVector operator*(ResourceVector a, double s) { return a *= s; }
  friend constexpr bool operator==(const ResourceVector&, const ResourceVector&) = default;

  constexpr bool non_negative() const { return power >= 0 && air >= 0 && liquid >= 0 && tiles >= 0; }

  /// Component-wise a <= b.
  constexpr bool fits_within(const ResourceVector& cap) const {
    return power <= cap.power && air <= cap.air && liquid <= cap.liquid && tiles <= cap.tiles;
  }

  friend std::ostream& operator<<(std::ostream& os, const ResourceVector& v) {
    return os << "(" << v.power << " kW, " << v.air << " CFM, " << v.liquid << " LPM, " << v.tiles
              << " tiles)";
  }
};

inline ResourceVector quantized(const ResourceVector& v) {
  return {quantize(v.power), quantize(v.air), quantize(v.liquid), std::round(v.tiles)};
}

}  // namespace dcsim
