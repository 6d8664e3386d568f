#pragma once

#include <string>
#include <vector>

#include "torhom/exactla.hpp"
#include "torhom/homology.hpp"
#include "torhom/subgroups.hpp"

namespace torhom {

// An orbit of cells of the ambient tessellation under the full group, together
// with the data needed to push the complex down to a finite-index subgroup:
// a finite stabilizer (given by generating words) and the boundary written as
// signed translates of lower-dimensional orbit representatives.
struct CellOrbit {
  std::string id;
  int dim = 0;
  long stabilizer_order = 1;
  std::vector<std::string> stabilizers;  // words generating the cell stabilizer

  struct Incidence {
    std::string cell;  // id of the face's orbit representative
    int sign = 1;
    std::string elt;  // group element carrying the representative onto the face
  };
  std::vector<Incidence> boundary;
};

struct OrbitCellComplex {
  int dimension = 0;  // top degree present in the tessellation (2 or 3)
  std::vector<std::string> generators;
  std::vector<CellOrbit> cells;

  // Index of the orbit with the given id, or -1.
  int find(const std::string& id) const;

  // Structural checks that do not need a coset action: unique ids, dimensions
  // in range, boundary entries pointing one dimension down, signs +-1.
  void validate() const;
};

OrbitCellComplex complex_from_json(const std::string& text);
std::string complex_to_json(const OrbitCellComplex& complex);

// One basis vector of the invariant cochains in a given degree: the indicator
// function of a stabilizer orbit on the coset space, tagged by its cell orbit.
struct FixedVector {
  int cell = 0;               // index into OrbitCellComplex::cells
  std::vector<int> support;   // cosets in the orbit, sorted
};

// Invariant cochains of one degree for a fixed finite-index subgroup.  The
// inner product is diagonal on the indicator basis: a vector supported on an
// orbit of size m over a cell with stabilizer order s has norm m/s.  delta
// maps into the next degree (rows indexed by that level's basis) and is empty
// in the top degree.
struct CochainLevel {
  int degree = 0;
  std::vector<FixedVector> basis;
  std::vector<mpq_class> gram;  // diagonal inner-product weights
  ZMat delta;
};

// Push the orbit complex down to the subgroup described by the coset action
// and assemble the invariant cochain levels, one per degree 0..dimension.
// The action's generator names must match the complex's generator list, and
// each stabilizer word must close up within its declared order on the cosets;
// violations throw.
std::vector<CochainLevel> assemble(const OrbitCellComplex& complex,
                                   const CosetAction& action);

// Hodge Laplacian delta* delta + delta delta* in degree i, as a rational
// matrix on the invariant cochains.  The adjoint is taken with respect to the
// diagonal inner products, so the result is symmetric only after reweighting.
QMat laplacian(const std::vector<CochainLevel>& levels, int i);

// Covolumes of the two natural integral structures on harmonic cochains in
// one degree.  r-tilde is the covolume of the saturated lattice of integral
// harmonic vectors; r is the covolume of the orthogonal projection of the
// integral cocycles onto the harmonic subspace.  A harmonic subspace has no
// volume on its own, so each report records which lattice its numbers refer
// to.  Both covolumes use the diagonal inner product of the level, and the
// exact Gram determinants are kept alongside the logs.  betti == 0 yields
// trivial = true with both logs zero by convention.
struct RegulatorReport {
  int degree = 0;
  long betti = 0;
  bool trivial = false;
  double log_r_tilde = 0.0;
  double log_r = 0.0;
  mpq_class gram_det_r_tilde = 1;
  mpq_class gram_det_r = 1;
  std::string lattice_r_tilde = "saturated integral harmonic lattice";
  std::string lattice_r = "projection of the integral cocycle lattice";
};

RegulatorReport regulators(const std::vector<CochainLevel>& levels, int i);

// First homology of the cover itself (every coset a distinct cell).  Only
// complexes whose stabilizers are all trivial describe genuine covers; any
// larger stabilizer throws, since torsion of an orbifold quotient is not what
// the chain complex below computes.
H1Decomposition torsion_of_cover(const OrbitCellComplex& complex,
                                 const CosetAction& action);

// A candidate dual 2-cycle given by coefficients on the degree-1 invariant
// basis; closed records whether delta of it vanishes exactly.
struct DualCycle {
  QVec coefficients;
  bool closed = false;
};

DualCycle dual_two_cycle(const std::vector<CochainLevel>& levels,
                         const QVec& omega);

// Upper bound cells_per_dual * sum |omega(e)| for the Gromov-Thurston style
// norm estimate; requires a closed cycle.
double gt_upper_bound(const DualCycle& cycle, long cells_per_dual);

}  // namespace torhom
