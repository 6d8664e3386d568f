// torhom: batch front end over the library.  Subcommands run level scans and
// per-level H1 reports for Bianchi congruence subgroups, equivariant
// regulator computations on orbit complexes, modular-symbol calculations,
// and the growth/spectrum bookkeeping; results go to stdout or --out as CSV
// (the table-of-record format) or JSON.
//
// Every emitted report carries the resolved configuration and its FNV-1a
// hash, so runs are reproducible and outputs diffable; wall times are only
// included under --timings, keeping default output byte-identical across
// runs of the same config.  Exit codes: 0 success, 1 computational or input
// failure, 2 usage.

#include <CLI11.hpp>
#include <json.hpp>

#include "torhom/equivariant.hpp"
#include "torhom/homology.hpp"
#include "torhom/symbols.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace torhom;

namespace {

constexpr const char* kVersion = "torhom 1.0.0";

// flag values that fail validation; reported as usage errors (exit 2)
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Opts {
  int d = 0;
  std::string kind = "sl2";
  std::vector<std::string> levels;
  std::string level;                 // twisting level for the order bound
  long min_norm = 1;
  long max_norm = 0;
  std::string primes;
  int workers = 1;
  std::string checkpoint;
  std::string alpha, beta, g, in;
  long M = 1;
  long p = 0;
  long budget = 1000000;
  double vol0 = 0, c = 1.0, V = 0;
  std::string file, action_file;
  std::string out;
  std::string format = "csv";
  long seed = 0;
  bool timings = false;
};

using Config = std::vector<std::pair<std::string, std::string>>;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_line(const Config& cfg) {
  std::string s;
  for (const auto& [k, v] : cfg) {
    if (!s.empty()) s += ' ';
    s += k + '=' + v;
  }
  return s;
}

std::string config_hash(const Config& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx",
                (unsigned long long)fnv1a(config_line(cfg)));
  return buf;
}

nlohmann::json config_json(const Config& cfg, double wall, bool timings) {
  nlohmann::json j;
  for (const auto& [k, v] : cfg) j[k] = v;
  j["version"] = kVersion;
  j["config_hash"] = config_hash(cfg);
  if (timings) j["wall_seconds"] = wall;
  return j;
}

std::string csv_prelude(const Config& cfg, double wall, bool timings) {
  std::string s = std::string("# ") + kVersion + "\n";
  s += "# config " + config_line(cfg) + "\n";
  s += "# config_hash " + config_hash(cfg) + "\n";
  if (timings) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "# wall %.3f\n", wall);
    s += buf;
  }
  return s;
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

void emit(const Opts& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw std::runtime_error("cannot open output file " + o.out);
  f << text;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Flag resolution.

const QuadField& resolve_field(int d) {
  try {
    return QuadField::get(d);
  } catch (const std::exception&) {
    throw UsageError("unsupported field d=" + std::to_string(d) +
                     " (supported: 1, 2, 3, 7, 11)");
  }
}

void resolve_kind(const std::string& kind) {
  if (kind != "sl2" && kind != "psl2" && kind != "pgl2")
    throw UsageError("unsupported kind '" + kind + "' (sl2, psl2 or pgl2)");
}

void resolve_format(const std::string& format) {
  if (format != "csv" && format != "json")
    throw UsageError("unsupported format '" + format + "' (csv or json)");
}

P1Point resolve_cusp(const QuadField& F, const std::string& s, const char* flag) {
  try {
    return p1_from_str(F, s);
  } catch (const std::exception& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

QfIdeal resolve_level(const QuadField& F, const std::string& s) {
  P1Point p;
  try {
    p = p1_from_str(F, s);
  } catch (const std::exception& e) {
    throw UsageError("--level: " + std::string(e.what()));
  }
  if (p.is_infinity() || p.den != QuadElem(F, 1) || p.num.is_zero())
    throw UsageError("--level: expected a nonzero integral element, got " + s);
  return principal_ideal(p.num);
}

std::vector<unsigned long> resolve_primes(const std::string& s) {
  if (s.empty()) return modl_default_primes();
  std::vector<unsigned long> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    mpz_class l;
    try {
      l = mpz_class(item);
    } catch (const std::exception&) {
      throw UsageError("--primes: not an integer: " + item);
    }
    if (l < 2 || !mpz_probab_prime_p(l.get_mpz_t(), 30))
      throw UsageError("--primes: not a prime: " + item);
    out.push_back(l.get_ui());
  }
  if (out.empty()) throw UsageError("--primes: empty list");
  return out;
}

// symbol assembled from --alpha/--beta/--g (or a full --in file), reusing the
// json reader so flag syntax and file syntax agree
ModularSymbol resolve_symbol(const QuadField& F, const Opts& o,
                             const std::string& def_alpha,
                             const std::string& def_beta) {
  std::string text;
  if (!o.in.empty()) {
    text = slurp(o.in);
  } else {
    nlohmann::json j;
    j["alpha"] = o.alpha.empty() ? def_alpha : o.alpha;
    j["beta"] = o.beta.empty() ? def_beta : o.beta;
    if (o.g.empty()) {
      j["g"] = nlohmann::json::array({nlohmann::json::array({"1", "0"}),
                                      nlohmann::json::array({"0", "1"})});
    } else {
      nlohmann::json jg;
      try {
        jg = nlohmann::json::parse(o.g);
      } catch (const std::exception& e) {
        throw UsageError("--g: " + std::string(e.what()));
      }
      j["g"] = jg;
    }
    text = j.dump();
  }
  try {
    return symbol_from_json(F, text);
  } catch (const std::exception& e) {
    if (!o.in.empty()) throw std::runtime_error(o.in + ": " + e.what());
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------
// bianchi h1

int run_bianchi_h1(const Opts& o) {
  const QuadField& F = resolve_field(o.d);
  resolve_kind(o.kind);
  resolve_format(o.format);
  std::vector<unsigned long> primes = resolve_primes(o.primes);
  std::vector<QfIdeal> levels;
  for (const auto& s : o.levels) levels.push_back(resolve_level(F, s));

  Config cfg = {{"command", "bianchi h1"},
                {"d", std::to_string(o.d)},
                {"kind", o.kind}};
  for (const auto& s : o.levels) cfg.emplace_back("level", s);
  if (!o.primes.empty()) cfg.emplace_back("primes", o.primes);
  cfg.emplace_back("format", o.format);
  cfg.emplace_back("seed", std::to_string(o.seed));

  auto t0 = std::chrono::steady_clock::now();
  Presentation pres = bianchi_presentation(o.d, o.kind);
  std::vector<H1Report> reports;
  for (const auto& I : levels) {
    H1Report rep{I};
    try {
      rep = h1_report(pres, I, primes);
    } catch (const std::exception& e) {
      rep.kind = o.kind;
      rep.error = e.what();
      std::cerr << "level " << ideal_label(I) << ": " << e.what() << "\n";
    }
    reports.push_back(std::move(rep));
  }
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  bool all_failed = !reports.empty();
  for (const auto& r : reports) all_failed = all_failed && !r.ok();

  if (o.format == "csv") {
    std::string s = csv_prelude(cfg, wall, o.timings);
    s += h1_csv_header() + "\n";
    for (const auto& r : reports) s += h1_csv_row(r, o.timings) + "\n";
    emit(o, s);
  } else {
    nlohmann::json j;
    j["config"] = config_json(cfg, wall, o.timings);
    j["reports"] = nlohmann::json::array();
    for (const auto& r : reports)
      j["reports"].push_back(nlohmann::json::parse(h1_report_json(r, o.timings)));
    emit(o, j.dump(2) + "\n");
  }
  return all_failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// scan, with optional checkpoint/resume

H1Report report_from_json(const nlohmann::json& j, const QfIdeal& level) {
  H1Report r{level};
  r.kind = j.value("kind", "");
  if (j.contains("error")) {
    r.error = j.at("error").get<std::string>();
    return r;
  }
  r.index = j.at("index").get<long>();
  r.b1 = j.at("b1").get<long>();
  for (const auto& t : j.at("torsion"))
    r.torsion.emplace_back(t.get<std::string>());
  r.cusps = j.at("cusps").get<long>();
  r.torus_cusps = j.at("torus_cusps").get<long>();
  r.cuspidal = j.at("cuspidal_dim").get<long>();
  r.cuspidal_floored = j.value("cuspidal_floored", false);
  r.modl_bound = j.at("modl_bound").get<long>();
  return r;
}

// append-only JSONL sink, flushed every 25 levels (and on close)
struct CheckpointWriter {
  std::ofstream out;
  int pending = 0;

  explicit CheckpointWriter(const std::string& path, bool fresh) {
    out.open(path, fresh ? std::ios::trunc : std::ios::app);
    if (!out) throw std::runtime_error("cannot open checkpoint " + path);
  }
  void line(const std::string& s) {
    out << s << '\n';
    if (++pending >= 25) {
      out.flush();
      pending = 0;
    }
  }
};

int run_scan(const Opts& o) {
  const QuadField& F = resolve_field(o.d);
  resolve_kind(o.kind);
  resolve_format(o.format);
  if (o.max_norm < 0) throw UsageError("--max-norm: must be >= 0");
  if (o.min_norm < 1) throw UsageError("--min-norm: must be >= 1");
  if (o.workers < 1) throw UsageError("--workers: must be >= 1");

  Config cfg = {{"command", "scan"},
                {"d", std::to_string(o.d)},
                {"kind", o.kind},
                {"min_norm", std::to_string(o.min_norm)},
                {"max_norm", std::to_string(o.max_norm)},
                {"workers", std::to_string(o.workers)},
                {"format", o.format},
                {"seed", std::to_string(o.seed)}};
  if (!o.checkpoint.empty()) cfg.emplace_back("checkpoint", o.checkpoint);

  // the checkpoint key pins what is being scanned, not how: a resume may
  // change workers or output format freely
  nlohmann::json scan_key = {{"d", o.d},
                             {"kind", o.kind},
                             {"min_norm", o.min_norm},
                             {"max_norm", o.max_norm}};

  auto t0 = std::chrono::steady_clock::now();
  ScanResult result;

  // stored rows from an interrupted run, keyed by level label
  std::map<std::string, nlohmann::json> stored;
  bool resuming = false;
  if (!o.checkpoint.empty()) {
    std::ifstream in(o.checkpoint);
    if (in) {
      std::string first;
      if (std::getline(in, first) && !first.empty()) {
        nlohmann::json head = nlohmann::json::parse(first);
        if (head.value("scan", nlohmann::json()) != scan_key)
          throw std::runtime_error("checkpoint " + o.checkpoint +
                                   " belongs to a different scan");
        resuming = true;
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          nlohmann::json row = nlohmann::json::parse(line);
          stored[row.at("level").get<std::string>()] = row;
        }
      }
    }
  }

  std::optional<CheckpointWriter> ckpt;
  if (!o.checkpoint.empty()) {
    ckpt.emplace(o.checkpoint, !resuming);
    if (!resuming)
      ckpt->line(nlohmann::json({{"scan", scan_key}}).dump());
  }

  if (!resuming) {
    auto on_done = [&](const H1Report& r) {
      if (ckpt)
        ckpt->line(nlohmann::json::parse(h1_report_json(r, false)).dump());
    };
    result = level_scan(o.d, o.kind, o.min_norm, o.max_norm, o.workers, on_done);
  } else {
    // recompute only the missing levels, with the same per-level pipeline
    Presentation pres = bianchi_presentation(o.d, o.kind);
    std::vector<QfIdeal> levels;
    for (long n = std::max(o.min_norm, 1L); n <= o.max_norm; ++n)
      for (const auto& I : ideals_of_norm(F, n)) levels.push_back(I);
    result.reports.assign(levels.size(), H1Report{});
    std::vector<long> missing;
    for (long i = 0; i < (long)levels.size(); ++i) {
      auto it = stored.find(ideal_label(levels[i]));
      if (it != stored.end())
        result.reports[i] = report_from_json(it->second, levels[i]);
      else
        missing.push_back(i);
    }
    const long count = (long)missing.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(o.workers, 1)) \
    if (o.workers > 1)
#endif
    for (long k = 0; k < count; ++k) {
      long i = missing[k];
      H1Report rep{levels[i]};
      try {
        rep = h1_report(pres, levels[i]);
      } catch (const std::exception& e) {
        rep.kind = o.kind;
        rep.error = e.what();
      }
#ifdef _OPENMP
#pragma omp critical(torhom_cli_resume)
#endif
      {
        result.reports[i] = rep;
        if (ckpt)
          ckpt->line(nlohmann::json::parse(h1_report_json(rep, false)).dump());
      }
    }
    result.histogram = cuspidal_histogram(result.reports);
  }
  if (ckpt) ckpt->out.flush();
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (o.format == "csv") {
    std::string s = csv_prelude(cfg, wall, o.timings);
    s += h1_csv_header() + "\n";
    for (const auto& r : result.reports) s += h1_csv_row(r, o.timings) + "\n";
    long total = 0;
    std::string hist;
    for (size_t i = 0; i < result.histogram.size(); ++i) {
      if (i) hist += ',';
      hist += std::to_string(result.histogram[i]);
      total += result.histogram[i];
    }
    s += "# histogram " + hist + "\n# total " + std::to_string(total) + "\n";
    emit(o, s);
  } else {
    nlohmann::json j = nlohmann::json::parse(scan_json(result, o.timings));
    j["config"] = config_json(cfg, wall, o.timings);
    emit(o, j.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// tetra regulators

int run_tetra(const Opts& o) {
  resolve_format(o.format);
  Config cfg = {{"command", "tetra regulators"},
                {"complex", o.file},
                {"action", o.action_file},
                {"format", o.format},
                {"seed", std::to_string(o.seed)}};

  auto t0 = std::chrono::steady_clock::now();
  OrbitCellComplex complex = complex_from_json(slurp(o.file));
  CosetAction action = coset_action_from_json(slurp(o.action_file));
  std::vector<CochainLevel> levels = assemble(complex, action);
  long index = action.degree;

  std::vector<RegulatorReport> regs;
  for (int i = 0; i < (int)levels.size(); ++i) regs.push_back(regulators(levels, i));

  std::string torsion_note;
  std::vector<mpz_class> torsion;
  long cover_b1 = -1;
  try {
    H1Decomposition h = torsion_of_cover(complex, action);
    torsion = h.torsion;
    cover_b1 = h.b1;
  } catch (const std::exception& e) {
    torsion_note = e.what();
  }
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (o.format == "csv") {
    std::string s = csv_prelude(cfg, wall, o.timings);
    s += "degree,betti,log_r_tilde,log_r_tilde_per_index,log_r,trivial\n";
    for (const auto& r : regs) {
      s += std::to_string(r.degree) + ',' + std::to_string(r.betti) + ',';
      s += fmt_double(r.log_r_tilde) + ',';
      s += fmt_double(r.log_r_tilde / (double)index) + ',';
      s += fmt_double(r.log_r) + ',' + (r.trivial ? "1" : "0") + "\n";
    }
    s += "# index " + std::to_string(index) + "\n";
    if (torsion_note.empty()) {
      std::string ts;
      for (size_t i = 0; i < torsion.size(); ++i)
        ts += (i ? ";" : "") + torsion[i].get_str();
      s += "# cover_b1 " + std::to_string(cover_b1) + "\n";
      s += "# torsion " + (ts.empty() ? "none" : ts) + "\n";
    } else {
      s += "# torsion n/a: " + torsion_note + "\n";
    }
    emit(o, s);
  } else {
    nlohmann::json j;
    j["config"] = config_json(cfg, wall, o.timings);
    j["index"] = index;
    j["regulators"] = nlohmann::json::array();
    for (const auto& r : regs) {
      nlohmann::json rj;
      rj["degree"] = r.degree;
      rj["betti"] = r.betti;
      rj["trivial"] = r.trivial;
      rj["log_r_tilde"] = r.log_r_tilde;
      rj["log_r_tilde_per_index"] = r.log_r_tilde / (double)index;
      rj["log_r"] = r.log_r;
      rj["gram_det_r_tilde"] = r.gram_det_r_tilde.get_str();
      rj["gram_det_r"] = r.gram_det_r.get_str();
      j["regulators"].push_back(rj);
    }
    if (torsion_note.empty()) {
      j["cover_b1"] = cover_b1;
      j["torsion"] = nlohmann::json::array();
      for (const auto& t : torsion) j["torsion"].push_back(t.get_str());
    } else {
      j["torsion_note"] = torsion_note;
    }
    emit(o, j.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// symbols conductor | split | decompose

int run_symbols_conductor(const Opts& o) {
  const QuadField& F = resolve_field(o.d);
  resolve_format(o.format);
  ModularSymbol s = resolve_symbol(F, o, "0", "inf");
  std::optional<QfIdeal> twist;
  if (!o.level.empty()) twist = resolve_level(F, o.level);

  Config cfg = {{"command", "symbols conductor"},
                {"d", std::to_string(o.d)},
                {"alpha", s.alpha.str()},
                {"beta", s.beta.str()}};
  if (!o.level.empty()) cfg.emplace_back("level", o.level);
  cfg.emplace_back("format", o.format);
  cfg.emplace_back("seed", std::to_string(o.seed));

  auto t0 = std::chrono::steady_clock::now();
  ConductorData c = conductor(s);
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (o.format == "csv") {
    std::string str = csv_prelude(cfg, wall, o.timings);
    str += "conductor,norm,denominator,support";
    if (twist) str += ",order_bound";
    str += "\n" + ideal_label(c.f) + ',' + c.f.norm().get_str() + ',' +
           c.denominator.get_str() + ',';
    for (size_t i = 0; i < c.support.size(); ++i) {
      if (i) str += ';';
      str += ideal_label(c.support[i].first) + '^' +
             std::to_string(c.support[i].second);
    }
    if (twist) str += ',' + character_order_bound(c, *twist).get_str();
    str += "\n";
    emit(o, str);
  } else {
    nlohmann::json j = nlohmann::json::parse(conductor_to_json(c));
    j["config"] = config_json(cfg, wall, o.timings);
    j["symbol"] = nlohmann::json::parse(symbol_to_json(s));
    if (twist) {
      j["level"] = ideal_label(*twist);
      j["order_bound"] = character_order_bound(c, *twist).get_str();
    }
    emit(o, j.dump(2) + "\n");
  }
  return 0;
}

int run_symbols_split(const Opts& o) {
  const QuadField& F = resolve_field(o.d);
  resolve_format(o.format);
  if (o.M < 1) throw UsageError("--M: must be >= 1");
  mpz_class p = o.p;
  if (p < 2 || !mpz_probab_prime_p(p.get_mpz_t(), 30))
    throw UsageError("--p: must be a rational prime");
  if (o.budget < 2) throw UsageError("--budget: must be >= 2");
  ModularSymbol s = resolve_symbol(F, o, "0", "inf");

  Config cfg = {{"command", "symbols split"},
                {"d", std::to_string(o.d)},
                {"M", std::to_string(o.M)},
                {"p", std::to_string(o.p)},
                {"budget", std::to_string(o.budget)},
                {"format", o.format},
                {"seed", std::to_string(o.seed)}};

  auto t0 = std::chrono::steady_clock::now();
  SplitResult r = split(s, o.M, p, o.budget);
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (o.format == "csv") {
    std::string str = csv_prelude(cfg, wall, o.timings);
    str += "x,left_conductor,left_denominator,right_conductor,right_denominator\n";
    str += r.x.str() + ',' + ideal_label(r.left_conductor.f) + ',' +
           r.left_conductor.denominator.get_str() + ',' +
           ideal_label(r.right_conductor.f) + ',' +
           r.right_conductor.denominator.get_str() + "\n";
    emit(o, str);
  } else {
    nlohmann::json j;
    j["config"] = config_json(cfg, wall, o.timings);
    j["x"] = r.x.str();
    j["left"] = nlohmann::json::parse(symbol_to_json(r.left));
    j["right"] = nlohmann::json::parse(symbol_to_json(r.right));
    j["left_conductor"] = nlohmann::json::parse(conductor_to_json(r.left_conductor));
    j["right_conductor"] = nlohmann::json::parse(conductor_to_json(r.right_conductor));
    j["local_data"] = nlohmann::json::array();
    for (const auto& ld : r.local_data)
      j["local_data"].push_back({{"prime", ideal_label(ld.prime)},
                                 {"n_v", ld.n_v},
                                 {"m_v", ld.m_v},
                                 {"beta_v", ld.beta_v.str()}});
    j["witnesses"] = {{"a1", r.a1.str()},
                      {"a2", r.a2.str()},
                      {"b1", r.b1.str()},
                      {"b2", r.b2.str()},
                      {"n0", ideal_label(r.n0)},
                      {"a1_ideal", ideal_label(r.a1_ideal)},
                      {"a2_ideal", ideal_label(r.a2_ideal)},
                      {"a1_prime", ideal_label(r.a1_prime)},
                      {"a2_prime", ideal_label(r.a2_prime)},
                      {"b1_prime", ideal_label(r.b1_prime)},
                      {"b2_prime", ideal_label(r.b2_prime)}};
    emit(o, j.dump(2) + "\n");
  }
  return 0;
}

int run_symbols_decompose(const Opts& o) {
  const QuadField& F = resolve_field(o.d);
  resolve_format(o.format);
  if (o.alpha.empty() || o.beta.empty())
    throw UsageError("--alpha and --beta are required");
  P1Point alpha = resolve_cusp(F, o.alpha, "--alpha");
  P1Point beta = resolve_cusp(F, o.beta, "--beta");

  Config cfg = {{"command", "symbols decompose"},
                {"d", std::to_string(o.d)},
                {"alpha", alpha.str()},
                {"beta", beta.str()},
                {"format", o.format},
                {"seed", std::to_string(o.seed)}};

  auto t0 = std::chrono::steady_clock::now();
  std::vector<Mat2> chain = manin_decompose(alpha, beta);
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  auto from = [](const Mat2& m) { return p1_point(m[1], m[3]).str(); };
  auto to = [](const Mat2& m) { return p1_point(m[0], m[2]).str(); };

  if (o.format == "csv") {
    std::string s = csv_prelude(cfg, wall, o.timings);
    s += "from,to,g00,g01,g10,g11\n";
    for (const auto& m : chain)
      s += from(m) + ',' + to(m) + ',' + m[0].str() + ',' + m[1].str() + ',' +
           m[2].str() + ',' + m[3].str() + "\n";
    emit(o, s);
  } else {
    nlohmann::json j;
    j["config"] = config_json(cfg, wall, o.timings);
    j["count"] = chain.size();
    j["segments"] = nlohmann::json::array();
    for (const auto& m : chain) {
      nlohmann::json seg;
      seg["from"] = from(m);
      seg["to"] = to(m);
      seg["g"] = nlohmann::json::array(
          {nlohmann::json::array({m[0].str(), m[1].str()}),
           nlohmann::json::array({m[2].str(), m[3].str()})});
      j["segments"].push_back(seg);
    }
    emit(o, j.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// growth and spectrum

int run_growth(const Opts& o) {
  resolve_format(o.format);
  Config cfg = {{"command", "growth"},
                {"records", o.file},
                {"vol0", fmt_double(o.vol0)},
                {"format", o.format},
                {"seed", std::to_string(o.seed)}};

  auto t0 = std::chrono::steady_clock::now();
  nlohmann::json jr = nlohmann::json::parse(slurp(o.file));
  if (!jr.is_array()) throw std::runtime_error(o.file + ": expected an array");
  std::vector<GrowthRecord> records;
  for (const auto& row : jr) {
    GrowthRecord rec;
    if (row.contains("volume")) {
      rec.volume = row.at("volume").get<double>();
    } else if (row.contains("index")) {
      if (o.vol0 <= 0)
        throw std::runtime_error(
            "records give indexes; pass the base volume via --vol0");
      rec.volume = row.at("index").get<double>() * o.vol0;
    } else {
      throw std::runtime_error(o.file + ": record needs volume or index");
    }
    rec.log_torsion = row.at("log_torsion").get<double>();
    rec.betti = row.value("betti", 0L);
    records.push_back(rec);
  }
  std::vector<GrowthRow> rows = growth_report(records);
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (o.format == "csv") {
    std::string s = csv_prelude(cfg, wall, o.timings);
    s += "volume,ratio,deviation,betti_diag\n";
    for (const auto& r : rows)
      s += fmt_double(r.record.volume) + ',' + fmt_double(r.ratio) + ',' +
           fmt_double(r.deviation) + ',' + fmt_double(r.betti_diag) + "\n";
    s += "# limit " + fmt_double(torsion_growth_limit()) + "\n";
    emit(o, s);
  } else {
    nlohmann::json j;
    j["config"] = config_json(cfg, wall, o.timings);
    j["limit"] = torsion_growth_limit();
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows)
      j["rows"].push_back({{"volume", r.record.volume},
                           {"log_torsion", r.record.log_torsion},
                           {"betti", r.record.betti},
                           {"ratio", r.ratio},
                           {"deviation", r.deviation},
                           {"betti_diag", r.betti_diag}});
    emit(o, j.dump(2) + "\n");
  }
  return 0;
}

int run_spectrum(const Opts& o) {
  resolve_format(o.format);
  if (o.V <= 0) throw UsageError("--V: volume must be positive");
  if (o.c <= 0) throw UsageError("--c: threshold must be positive");

  Config cfg = {{"command", "spectrum"},
                {"spec", o.file},
                {"c", fmt_double(o.c)},
                {"V", fmt_double(o.V)},
                {"format", o.format},
                {"seed", std::to_string(o.seed)}};

  auto t0 = std::chrono::steady_clock::now();
  nlohmann::json js = nlohmann::json::parse(slurp(o.file));
  const nlohmann::json& arr = js.is_array() ? js : js.at("eigenvalues");
  std::vector<double> eigs;
  for (const auto& e : arr) eigs.push_back(e.get<double>());
  double sum = small_eigenvalue_sum(eigs, o.V, o.c);
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (o.format == "csv") {
    std::string s = csv_prelude(cfg, wall, o.timings);
    s += "volume,threshold,count,sum\n";
    s += fmt_double(o.V) + ',' + fmt_double(o.c) + ',' +
         std::to_string(eigs.size()) + ',' + fmt_double(sum) + "\n";
    emit(o, s);
  } else {
    nlohmann::json j;
    j["config"] = config_json(cfg, wall, o.timings);
    j["volume"] = o.V;
    j["threshold"] = o.c;
    j["count"] = eigs.size();
    j["sum"] = sum;
    emit(o, j.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Opts o;
  CLI::App app{"exact homological invariants of Bianchi and tetrahedral groups"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", o.out, "write the report here instead of stdout");
    cmd->add_option("--format", o.format, "csv or json (default csv)");
    cmd->add_option("--seed", o.seed, "seed echoed into the config");
    cmd->add_flag("--timings", o.timings, "include wall times in the output");
  };

  CLI::App* bianchi = app.add_subcommand("bianchi", "Bianchi group homology");
  bianchi->require_subcommand(1);
  CLI::App* h1 = bianchi->add_subcommand("h1", "H1 reports for Gamma_0 levels");
  h1->add_option("-d", o.d, "field discriminant label (1, 2, 3, 7, 11)")->required();
  h1->add_option("--kind", o.kind, "sl2, psl2 or pgl2 (default sl2)");
  h1->add_option("--level", o.levels, "level generator, may repeat")->required();
  h1->add_option("--primes", o.primes, "comma list of mod-l primes");
  add_common(h1);

  CLI::App* scan = app.add_subcommand("scan", "H1 over a range of level norms");
  scan->add_option("-d", o.d, "field discriminant label")->required();
  scan->add_option("--kind", o.kind, "sl2, psl2 or pgl2 (default sl2)");
  scan->add_option("--min-norm", o.min_norm, "smallest level norm (default 1)");
  scan->add_option("--max-norm", o.max_norm, "largest level norm")->required();
  scan->add_option("--workers", o.workers, "parallel workers (default 1)");
  scan->add_option("--checkpoint", o.checkpoint,
                   "JSONL progress file; reused to resume an interrupted scan");
  add_common(scan);

  CLI::App* tetra = app.add_subcommand("tetra", "tetrahedral orbit complexes");
  tetra->require_subcommand(1);
  CLI::App* reg = tetra->add_subcommand("regulators", "cochain regulators of a cover");
  reg->add_option("complex", o.file, "orbit complex JSON")
      ->required()
      ->check(CLI::ExistingFile);
  reg->add_option("action", o.action_file, "coset action JSON")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(reg);

  CLI::App* symbols = app.add_subcommand("symbols", "modular symbol calculus");
  symbols->require_subcommand(1);
  CLI::App* cond = symbols->add_subcommand("conductor", "conductor and denominator");
  cond->add_option("-d", o.d, "field discriminant label")->required();
  cond->add_option("--alpha", o.alpha, "first cusp (default 0)");
  cond->add_option("--beta", o.beta, "second cusp (default inf)");
  cond->add_option("--g", o.g, "2x2 matrix as a JSON array of entry strings");
  cond->add_option("--in", o.in, "read the full symbol from this JSON file");
  cond->add_option("--level", o.level, "also report the character order bound");
  add_common(cond);

  CLI::App* spl = symbols->add_subcommand("split", "denominator-avoiding split");
  spl->add_option("-d", o.d, "field discriminant label")->required();
  spl->add_option("--M", o.M, "modulus to keep the conductors prime to");
  spl->add_option("--p", o.p, "rational prime for the denominator bound")->required();
  spl->add_option("--g", o.g, "2x2 matrix as a JSON array of entry strings");
  spl->add_option("--in", o.in, "read the full symbol from this JSON file");
  spl->add_option("--budget", o.budget, "norm budget for the prime searches");
  add_common(spl);

  CLI::App* dec = symbols->add_subcommand("decompose", "Manin chain between cusps");
  dec->add_option("-d", o.d, "field discriminant label")->required();
  dec->add_option("--alpha", o.alpha, "first cusp")->required();
  dec->add_option("--beta", o.beta, "second cusp")->required();
  add_common(dec);

  CLI::App* growth = app.add_subcommand("growth", "torsion growth diagnostics");
  growth->add_option("records", o.file, "JSON array of growth records")
      ->required()
      ->check(CLI::ExistingFile);
  growth->add_option("--vol0", o.vol0, "base orbifold volume scaling indexes");
  add_common(growth);

  CLI::App* spectrum = app.add_subcommand("spectrum", "small eigenvalue sums");
  spectrum->add_option("spec", o.file, "JSON eigenvalue list")
      ->required()
      ->check(CLI::ExistingFile);
  spectrum->add_option("--c", o.c, "eigenvalue threshold (default 1)");
  spectrum->add_option("--V", o.V, "volume normalizer")->required();
  add_common(spectrum);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (h1->parsed()) return run_bianchi_h1(o);
    if (scan->parsed()) return run_scan(o);
    if (reg->parsed()) return run_tetra(o);
    if (cond->parsed()) return run_symbols_conductor(o);
    if (spl->parsed()) return run_symbols_split(o);
    if (dec->parsed()) return run_symbols_decompose(o);
    if (growth->parsed()) return run_growth(o);
    if (spectrum->parsed()) return run_spectrum(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
