// Writes the reference orbit-complex fixtures: subdivided circles, the two-
// and three-torus, the three-sphere, lens spaces L(p,1), and a genus-2
// surface.  All of them carry the trivial group, so the JSON is self
// contained and the expected homology is classical.
#include "torhom/equivariant.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

using namespace torhom;

namespace {

CellOrbit cell(const std::string& id, int dim) {
  CellOrbit c;
  c.id = id;
  c.dim = dim;
  return c;
}

void face(CellOrbit& c, const std::string& id, int sign) {
  c.boundary.push_back({id, sign, ""});
}

// k vertices and k edges around a circle, padded to dimension 2.
OrbitCellComplex circle(int k) {
  OrbitCellComplex x;
  x.dimension = 2;
  for (int j = 0; j < k; ++j)
    x.cells.push_back(cell("v" + std::to_string(j), 0));
  for (int j = 0; j < k; ++j) {
    CellOrbit e = cell("e" + std::to_string(j), 1);
    face(e, "v" + std::to_string((j + 1) % k), 1);
    face(e, "v" + std::to_string(j), -1);
    x.cells.push_back(e);
  }
  return x;
}

// One vertex, two loops, one square glued along the commutator.
OrbitCellComplex torus2() {
  OrbitCellComplex x;
  x.dimension = 2;
  x.cells.push_back(cell("v", 0));
  for (const char* e : {"a", "b"}) {
    CellOrbit c = cell(e, 1);
    face(c, "v", 1);
    face(c, "v", -1);
    x.cells.push_back(c);
  }
  CellOrbit f = cell("f", 2);
  face(f, "a", 1);
  face(f, "b", 1);
  face(f, "a", -1);
  face(f, "b", -1);
  x.cells.push_back(f);
  return x;
}

// Product CW structure of the 3-torus: every boundary cancels in pairs.
OrbitCellComplex torus3() {
  OrbitCellComplex x;
  x.dimension = 3;
  x.cells.push_back(cell("v", 0));
  for (const char* e : {"a", "b", "c"}) {
    CellOrbit c = cell(e, 1);
    face(c, "v", 1);
    face(c, "v", -1);
    x.cells.push_back(c);
  }
  const char* faces[3][2] = {{"a", "b"}, {"b", "c"}, {"c", "a"}};
  for (const auto& pair : faces) {
    CellOrbit f = cell(std::string("f") + pair[0] + pair[1], 2);
    face(f, pair[0], 1);
    face(f, pair[1], 1);
    face(f, pair[0], -1);
    face(f, pair[1], -1);
    x.cells.push_back(f);
  }
  CellOrbit top = cell("t", 3);
  for (const auto& pair : faces) {
    face(top, std::string("f") + pair[0] + pair[1], 1);
    face(top, std::string("f") + pair[0] + pair[1], -1);
  }
  x.cells.push_back(top);
  return x;
}

// Minimal CW sphere: a point and a 3-cell collapsed onto it.
OrbitCellComplex sphere3() {
  OrbitCellComplex x;
  x.dimension = 3;
  x.cells.push_back(cell("v", 0));
  x.cells.push_back(cell("t", 3));
  return x;
}

// L(p,1) with one cell per dimension; the disc wraps p times around the loop
// and the solid part attaches trivially.
OrbitCellComplex lens(int p) {
  OrbitCellComplex x;
  x.dimension = 3;
  x.cells.push_back(cell("v", 0));
  CellOrbit e = cell("e", 1);
  face(e, "v", 1);
  face(e, "v", -1);
  x.cells.push_back(e);
  CellOrbit f = cell("f", 2);
  for (int j = 0; j < p; ++j) face(f, "e", 1);
  x.cells.push_back(f);
  x.cells.push_back(cell("t", 3));
  return x;
}

// One vertex, four loops, one octagon glued along the product of commutators.
OrbitCellComplex genus2() {
  OrbitCellComplex x;
  x.dimension = 2;
  x.cells.push_back(cell("v", 0));
  for (const char* e : {"a", "b", "c", "d"}) {
    CellOrbit c = cell(e, 1);
    face(c, "v", 1);
    face(c, "v", -1);
    x.cells.push_back(c);
  }
  CellOrbit f = cell("f", 2);
  for (const char* pair : {"ab", "cd"}) {
    face(f, std::string(1, pair[0]), 1);
    face(f, std::string(1, pair[1]), 1);
    face(f, std::string(1, pair[0]), -1);
    face(f, std::string(1, pair[1]), -1);
  }
  x.cells.push_back(f);
  return x;
}

void write(const std::filesystem::path& dir, const std::string& name,
           const OrbitCellComplex& x) {
  x.validate();
  std::ofstream out(dir / (name + ".json"));
  out << complex_to_json(x) << "\n";
  if (!out) {
    std::cerr << "failed to write " << name << ".json\n";
    std::exit(1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path dir = argc > 1 ? argv[1] : "tests/fixtures";
  std::filesystem::create_directories(dir);
  for (int k = 1; k <= 64; ++k)
    write(dir, "circle-" + std::to_string(k), circle(k));
  write(dir, "torus2", torus2());
  write(dir, "torus3", torus3());
  write(dir, "sphere3", sphere3());
  for (int p = 2; p <= 12; ++p)
    write(dir, "lens-" + std::to_string(p), lens(p));
  write(dir, "genus2", genus2());
  std::cout << "fixtures written to " << dir.string() << "\n";
  return 0;
}
