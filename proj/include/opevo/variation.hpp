#pragma once

#include <utility>
#include <vector>

#include "opevo/problems.hpp"
#include "opevo/rng.hpp"

namespace opevo::variation {

// Real-coded operators work within per-variable bounds [lower, upper].

/// Bounded simulated binary crossover; each variable crosses with
/// probability 0.5 and children swap genes with probability 0.5.
std::pair<RealGenome, RealGenome> sbx(const RealGenome& a, const RealGenome& b, const std::vector<double>& lower,
                                      const std::vector<double>& upper, double eta, Rng& rng);

void polynomial_mutation(RealGenome& x, const std::vector<double>& lower, const std::vector<double>& upper, double eta,
                         double rate, Rng& rng);

std::pair<BitGenome, BitGenome> two_point_crossover(const BitGenome& a, const BitGenome& b, Rng& rng);
void bitflip(BitGenome& x, double rate, Rng& rng);

/// OX: a random slice of one parent is kept in place, the remaining cities
/// are filled in the other parent's order starting after the slice.
std::pair<PermGenome, PermGenome> order_crossover(const PermGenome& a, const PermGenome& b, Rng& rng);
/// Reverses a random slice.
void inversion_mutation(PermGenome& x, Rng& rng);

/// Removes uniformly-random selected items until the capacity holds.
void rand_weight_repair(const ProblemInstance& instance, BitGenome& x, Rng& rng);

} // namespace opevo::variation
