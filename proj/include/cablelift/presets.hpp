#ifndef CABLELIFT_PRESETS_HPP_
#define CABLELIFT_PRESETS_HPP_

#include "cablelift/model.hpp"

namespace cablelift::presets {

/// Two 52 g quads carrying a 60 cm, 24 g MDF strip on 50 cm cables. The
/// leader (quad 1) holds the -b1 end, the follower the +b1 end.
SystemParams rod_two_quad();

/// Three quads at the vertices of a 60 cm, 23 g equilateral lamina.
SystemParams triangle_three_quad();

/// One quad over a point-like payload hanging from its centre of mass.
SystemParams single_quad_pendulum();

/// Equilateral circumradius for side length `side`.
double circumradius(double side);

}  // namespace cablelift::presets

#endif  // CABLELIFT_PRESETS_HPP_
