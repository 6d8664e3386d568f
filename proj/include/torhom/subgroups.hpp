// Finite-index subgroups as permutation coset actions: embedded Bianchi
// presentations (matrix images validated at load), Gamma_0(n) actions on
// P^1(O/n), Schreier spanning trees and generators, cusp orbits, and
// abelianized Reidemeister-Schreier relation matrices.
#pragma once

#include "torhom/quadfield.hpp"

#include <string>
#include <vector>

namespace torhom {

// Free-group word: letters +g / -g refer to generator g-1 / its inverse.
using Word = std::vector<int>;

Word word_inverse(const Word& w);
Word word_reduce(const Word& w);                       // free reduction
Word word_concat(const Word& a, const Word& b);        // reduced concatenation

struct Presentation {
  std::vector<std::string> gens;       // single-character names
  std::vector<Word> relators;
  std::vector<Mat2> mats;              // matrix images; empty for abstract ones
  std::vector<Word> parabolic;         // generators of the stabilizer of infinity
  const QuadField* F = nullptr;
  std::string kind;                    // "psl2" | "sl2" | "pgl2" | "" (abstract)
  int d = 0;

  int gen_index(const std::string& name) const;        // -1 if unknown
  Mat2 word_matrix(const Word& w) const;
};

// "atU" style: one character per letter, uppercase marks the inverse.
Word parse_word(const std::string& text, const std::vector<std::string>& gens);
std::string word_str(const Word& w, const std::vector<std::string>& gens);

// Inverse of a matrix with unit determinant (the only invertible ones in O).
Mat2 mat2_inv(const Mat2& m);

Presentation bianchi_presentation(int d, const std::string& kind);

struct CosetAction {
  int degree = 0;
  int base = 0;
  std::vector<std::string> gen_names;
  std::vector<std::vector<int>> perms;       // perms[g][i]: right action by gen g
  std::vector<std::vector<int>> inv_perms;   // filled by finalize()

  void finalize();                           // validate perms, build inverses
  int apply(int coset, int letter) const;
  int apply_word(int coset, const Word& w) const;
  bool transitive() const;
};

CosetAction gamma0_action(const Presentation& pres, const QfIdeal& level);

std::string coset_action_to_json(const CosetAction& a);
CosetAction coset_action_from_json(const std::string& text);
std::string presentation_to_json(const Presentation& p);
Presentation presentation_from_json(const std::string& text);

struct SchreierData {
  int degree = 0;
  std::vector<int> tree_parent;              // -1 at the base point
  std::vector<int> tree_letter;              // letter with parent.letter = coset
  std::vector<Word> coset_rep;               // tree word per coset (base: empty)
  std::vector<std::vector<int>> sg_index;    // [coset][gen] -> id, -1 on tree edges
  std::vector<Word> sg_words;                // one reduced word per generator id
  int count() const { return (int)sg_words.size(); }
};

SchreierData schreier(const CosetAction& act);

// Orbits of the subgroup generated by the given words on the coset space.
long cusp_count(const CosetAction& act, const std::vector<Word>& parabolic);

// Cusp cross-section types.  A cusp is a torus exactly when every Schreier
// generator of its stabilizer acts on the horosphere without rotation (equal
// diagonal entries of the upper-triangular matrix image).
struct CuspInfo {
  long cusps = 0;
  long torus_cusps = 0;
  std::vector<char> orbit_is_torus;          // one flag per cusp orbit
};
CuspInfo cusp_types(const Presentation& pres, const CosetAction& act);

// Relation matrix of H_1 of the subgroup: one row per (relator, coset),
// columns indexed by nontrivial Schreier generators.
SparseZMatrix abelianized_rs(const Presentation& pres, const CosetAction& act);

}  // namespace torhom
