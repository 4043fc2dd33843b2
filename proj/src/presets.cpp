#include "cablelift/presets.hpp"

#include <cmath>
#include <numbers>

namespace cablelift::presets {

namespace {

constexpr double kQuadMass = 0.052;
constexpr double kCableLength = 0.5;

QuadParams quad_at(const Vec3& attachment) {
  QuadParams q;
  q.mass = kQuadMass;
  q.cable_length = kCableLength;
  q.attachment = attachment;
  return q;
}

}  // namespace

double circumradius(double side) { return side / std::sqrt(3.0); }

SystemParams rod_two_quad() {
  constexpr double mass = 0.024;
  constexpr double length = 0.6;
  constexpr double width = 0.015;
  constexpr double thickness = 0.003;
  SystemParams p;
  p.payload_mass = mass;
  // Slender rod about b2, b3; rectangular cross-section about the long axis.
  p.payload_inertia = Vec3(mass * (width * width + thickness * thickness) / 12.0,
                           mass * length * length / 12.0, mass * length * length / 12.0)
                          .asDiagonal();
  p.quads = {quad_at(Vec3(-0.5 * length, 0, 0)), quad_at(Vec3(0.5 * length, 0, 0))};
  return p;
}

SystemParams triangle_three_quad() {
  constexpr double mass = 0.023;
  constexpr double side = 0.6;
  SystemParams p;
  p.payload_mass = mass;
  // Uniform equilateral lamina about its centroid.
  p.payload_inertia = Vec3(mass * side * side / 24.0, mass * side * side / 24.0,
                           mass * side * side / 12.0)
                          .asDiagonal();
  const double r = circumradius(side);
  for (int k = 0; k < 3; ++k) {
    const double angle = std::numbers::pi + 2.0 * std::numbers::pi * k / 3.0;
    p.quads.push_back(quad_at(Vec3(r * std::cos(angle), r * std::sin(angle), 0.0)));
  }
  return p;
}

SystemParams single_quad_pendulum() {
  SystemParams p;
  p.payload_mass = 0.024;
  p.payload_inertia = Mat3::Identity() * 1e-6;
  p.quads = {quad_at(Vec3::Zero())};
  return p;
}

}  // namespace cablelift::presets
