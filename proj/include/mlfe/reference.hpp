#pragma once

#include "mlfe/measures.hpp"
#include "mlfe/potentials.hpp"

/// Straightforward serial versions of the parallel kernels. They loop over
/// multi-indices directly and are kept for testing and benchmarking only.
namespace mlfe::reference {

GammaField gamma_field(const PotentialPair& pair, const JointDensity& density,
                       double floor = kGammaFloor);
double h_kappa(const PotentialPair& pair, const JointDensity& density);
double i_kappa(const PotentialPair& pair, const JointDensity& density);

/// One split implicit step with solve_pencil on every pencil, followed by
/// leaf symmetrization.
JointDensity flow_step(const PotentialPair& pair, const JointDensity& density, double dt);

}  // namespace mlfe::reference
