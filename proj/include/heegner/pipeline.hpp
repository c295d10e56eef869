#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "theta.hpp"

namespace heegner {

using json = nlohmann::json;

inline constexpr const char* kSchema = "heegner-tower/1";
inline constexpr const char* kCacheSchema = "heegner-tower/cache/1";

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  int D = 1;
  std::vector<Int> delta{-3};  // a or (a, b) for a + b omega_F
  std::vector<Int> beta;       // empty: searched
  Int nplus = 1, nminus = 11, p = 7;
  int k = 4;
  std::vector<Int> conductors{1, 2, 5};
  std::vector<int> depths{1, 2};
  std::vector<Int> hecke_primes{2, 3, 5, 13};
  std::vector<Int> euler_primes{2, 5};
  std::vector<std::pair<Int, Int>> eigenvalues;  // (v, a_v) for the ordinary form
  int n_max = 2;
  int theta_depth = 1;
  int height_bound = 2000;
  std::string cache_dir = "cache";
  std::string cache_format = "json";
  bool cache = true;
  unsigned long seed = 20261019;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

inline Int parse_int(const std::string& key, const std::string& s) {
  Int x;
  if (s.empty() || x.set_str(s[0] == '+' ? s.substr(1) : s, 10) != 0) throw Error("config", key + ": not an integer: " + s);
  return x;
}

inline std::vector<Int> parse_ints(const std::string& key, const std::string& s) {
  std::vector<Int> out;
  for (auto& t : split_list(s)) out.push_back(parse_int(key, t));
  return out;
}

inline int small_int(const std::string& key, const std::string& s) {
  Int x = parse_int(key, s);
  if (!x.fits_sint_p()) throw Error("config", key + ": out of range");
  return int(x.get_si());
}

inline std::string hex64(uint64_t h) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

}  // namespace detail

/// Flat key = value text; '#' starts a comment; lists are comma-separated.
inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config", "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq)), val = detail::trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw Error("config", "duplicate key " + key);
    using namespace detail;
    if (key == "field.D") c.D = small_int(key, val);
    else if (key == "cm.delta") c.delta = parse_ints(key, val);
    else if (key == "quat.beta") c.beta = parse_ints(key, val);
    else if (key == "quat.n_plus") c.nplus = parse_int(key, val);
    else if (key == "quat.n_minus") c.nminus = parse_int(key, val);
    else if (key == "prime.p") c.p = parse_int(key, val);
    else if (key == "precision.k") c.k = small_int(key, val);
    else if (key == "conductors") c.conductors = parse_ints(key, val);
    else if (key == "depths") {
      c.depths.clear();
      for (auto& x : parse_ints(key, val)) c.depths.push_back(small_int(key, x.get_str()));
    } else if (key == "hecke.primes") c.hecke_primes = parse_ints(key, val);
    else if (key == "euler.primes") c.euler_primes = parse_ints(key, val);
    else if (key == "form.eigenvalues") {
      c.eigenvalues.clear();
      for (auto& t : split_list(val)) {
        auto colon = t.find(':');
        if (colon == std::string::npos) throw Error("config", key + ": expected v:a_v, got " + t);
        c.eigenvalues.push_back({parse_int(key, trim(t.substr(0, colon))), parse_int(key, trim(t.substr(colon + 1)))});
      }
    } else if (key == "theta.n_max") c.n_max = small_int(key, val);
    else if (key == "theta.depth") c.theta_depth = small_int(key, val);
    else if (key == "search.height_bound") c.height_bound = small_int(key, val);
    else if (key == "cache.dir") c.cache_dir = val;
    else if (key == "cache.format") c.cache_format = val;
    else if (key == "cache.enabled") c.cache = val == "true" || val == "1";
    else if (key == "seed") c.seed = (unsigned long)parse_int(key, val).get_ui();
    else throw Error("config", "unknown key " + key);
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("config", "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

inline FieldElement field_element(const std::vector<Int>& v) {
  if (v.size() == 1) return FieldElement(Rat(v[0]));
  if (v.size() == 2) return FieldElement(Rat(v[0]), Rat(v[1]));
  throw Error("config", "field elements are given by one or two integers");
}

/// Checks every standing hypothesis; throws Error("config", "<name>: ...") on the first violation.
inline void validate_config(const RunConfig& c) {
  auto fail = [](const std::string& name, const std::string& what) { throw Error("config", name + ": " + what); };
  if (c.k < 1) fail("precision", "k must be positive");
  if (c.cache_format != "json") fail("cache.format", "only json is supported");
  for (int m : c.depths)
    if (m < 1) fail("depths", "depths must be positive");
  if (c.n_max < 0 || c.theta_depth < 1) fail("theta", "n_max >= 0 and depth >= 1 required");
  if (c.p < 3 || !is_prime(c.p)) fail("prime.p", "p must be an odd prime");
  if (c.nplus < 1 || c.nminus < 1) fail("level", "n+ and n- must be positive");
  TotallyRealField F;
  try {
    F = make_field(c.D);
  } catch (const Error& e) {
    fail("field", e.what());
  }
  FieldElement delta = field_element(c.delta);
  if (!F.totally_negative(delta)) fail("cm.delta", "delta must be totally negative");
  auto K = make_cm(F, delta);
  // n- squarefree, definite parity, then its primes inert in K
  std::vector<std::pair<PrimeIdeal, int>> fm;
  if (c.nminus > 1) fm = F.factor_ideal(FieldElement(Rat(c.nminus)));
  for (auto& [q, e] : fm)
    if (e > 1) fail("squarefree violation", "n- = " + c.nminus.get_str() + " is not squarefree");
  if ((fm.size() + size_t(F.degree)) % 2 != 0) fail("indefinite parity", "r + d is odd, B would be indefinite");
  for (auto& [q, e] : fm)
    if (K.splitting(q) != -1) fail("n- inert", "a prime above " + q.p.get_str() + " is not inert in K");
  if (c.nplus > 1)
    for (auto& [q, e] : F.factor_ideal(FieldElement(Rat(c.nplus))))
      if (K.splitting(q) != 1) fail("n+ split", "a prime above " + q.p.get_str() + " is not split in K");
  Int n = c.nplus * c.nminus;
  if (gcd(n, c.p) != 1) fail("coprimality", "p divides n");
  if (!disc_coprime(K, n * c.p)) fail("coprimality", "d_K is not coprime to n p");
  if (K.roots_of_unity().size() % c.p.get_ui() == 0) fail("coprimality", "p divides the number of roots of unity");
  for (auto& cc : c.conductors)
    if (cc < 1 || gcd(cc, n * c.p) != 1 || !disc_coprime(K, cc))
      fail("conductors", "c = " + cc.get_str() + " must be coprime to n p d_K");
  if (!c.beta.empty()) {
    auto ram = ramified_primes(F, delta, field_element(c.beta));
    std::vector<PrimeIdeal> want;
    if (c.nminus > 1)
      for (auto& [q, e] : F.factor_ideal(FieldElement(Rat(c.nminus)))) want.push_back(q);
    std::sort(ram.begin(), ram.end());
    std::sort(want.begin(), want.end());
    if (ram != want) fail("quat.beta", "(delta, beta) is not ramified exactly at n-");
  }
}

// ---------------------------------------------------------------------------
// Cache

inline uint64_t fnv1a(const std::string& s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline json lattice_json(const Lattice& L) {
  json rows = json::array();
  for (auto& r : L.int_basis()) {
    json row = json::array();
    for (auto& x : r) row.push_back(x.get_str());
    rows.push_back(row);
  }
  return {{"den", L.den().get_str()}, {"dim", L.dim()}, {"rows", rows}};
}

inline Lattice lattice_from_json(const json& j) {
  IMat rows;
  for (auto& r : j.at("rows")) {
    IVec row;
    for (auto& x : r) row.push_back(Int(x.get<std::string>()));
    rows.push_back(row);
  }
  return Lattice::from_int_rows(rows, Int(j.at("den").get<std::string>()), j.at("dim").get<size_t>());
}

/// Class set rebuilt from cached representatives, certified by the mass.
inline ClassSet class_set_from_ideals(const QuaternionAlgebra& B, const Lattice& R, const std::vector<Lattice>& ideals,
                                      const Rat& mass, const PrimeIdeal& v) {
  ClassSet cs;
  cs.order = R;
  cs.mass = mass;
  cs.traversal = v;
  cs.kmax = B.d() == 1 ? 16 : 4;
  for (auto& L : ideals) {
    RightIdeal I = make_right_ideal(B, L);
    if (right_order(B, L) != R) throw Error("cache", "cached ideal is not a right ideal of the order");
    cs.ideals.push_back(I);
    Lattice O = left_order(B, L);
    cs.left_orders.push_back(O);
    cs.weights.push_back(unit_group(B, O).size());
    cs.invariants.push_back(ideal_invariant(B, I, cs.kmax));
  }
  for (size_t i = 0; i < cs.ideals.size(); ++i)
    for (size_t j = 0; j < i; ++j)
      if (cs.invariants[i] == cs.invariants[j] && ideal_isomorphism(B, cs.ideals[i], cs.ideals[j]))
        throw Error("cache", "cached class representatives are not distinct");
  if (cs.weighted_count() != mass) throw Error("cache", "cached class set fails the mass check");
  return cs;
}

class ClassSetCache {
 public:
  ClassSetCache(std::string dir, bool enabled) : dir_(std::move(dir)), enabled_(enabled) {}

  /// Class set for (key, order), from disk when present; hits are counted.
  ClassSet get(const std::string& key, const QuaternionAlgebra& B, const Lattice& R, const Rat& mass,
               const PrimeIdeal& v) {
    std::filesystem::path f = std::filesystem::path(dir_) / (detail::hex64(fnv1a(key)) + ".json");
    if (enabled_ && std::filesystem::exists(f)) {
      json j;
      try {
        std::ifstream in(f);
        j = json::parse(in);
      } catch (const std::exception&) {
        throw Error("cache", "integrity error: unreadable entry " + f.string());
      }
      if (j.value("schema", "") != kCacheSchema || j.value("key", "") != key)
        throw Error("cache", "integrity error: header mismatch in " + f.string());
      if (j.value("digest", "") != detail::hex64(fnv1a(j.at("payload").dump())))
        throw Error("cache", "integrity error: digest mismatch in " + f.string());
      const json& pl = j.at("payload");
      if (lattice_from_json(pl.at("order")) != R) throw Error("cache", "integrity error: order mismatch in " + f.string());
      std::vector<Lattice> ideals;
      for (auto& x : pl.at("ideals")) ideals.push_back(lattice_from_json(x));
      ++hits;
      return class_set_from_ideals(B, R, ideals, mass, v);
    }
    ClassSet cs = right_ideal_classes(B, R, mass, v);
    if (enabled_) {
      json pl;
      pl["order"] = lattice_json(R);
      pl["mass"] = mass.get_str();
      pl["ideals"] = json::array();
      for (auto& I : cs.ideals) pl["ideals"].push_back(lattice_json(I.L));
      json j = {{"schema", kCacheSchema}, {"key", key}, {"digest", detail::hex64(fnv1a(pl.dump()))}, {"payload", pl}};
      std::filesystem::create_directories(dir_);
      std::filesystem::path tmp = f;
      tmp += ".tmp";
      {
        std::ofstream out(tmp);
        out << j.dump(1) << "\n";
      }
      std::filesystem::rename(tmp, f);
    }
    return cs;
  }

  int hits = 0;

 private:
  std::string dir_;
  bool enabled_;
};

// ---------------------------------------------------------------------------
// Session: the tower for one configuration, built lazily

class Session {
 public:
  explicit Session(RunConfig cfg) : cfg_(std::move(cfg)), cache_(cfg_.cache_dir, cfg_.cache) {
    validate_config(cfg_);
    F_ = make_field(cfg_.D);
    K_ = make_cm(F_, field_element(cfg_.delta));
    FieldElement beta = cfg_.beta.empty() ? choose_beta(K_, cfg_.nplus, cfg_.nminus, cfg_.p, cfg_.height_bound)
                                          : field_element(cfg_.beta);
    B_ = make_algebra(K_, beta);
    O_ = maximal_order(B_);
    if (F_.degree == 1) theta_ = choose_theta(K_, cfg_.p, cfg_.nplus * cfg_.nminus);
  }

  const RunConfig& config() const { return cfg_; }
  const QuaternionAlgebra& algebra() const { return B_; }
  const ClassSetCache& cache() const { return cache_; }
  bool over_q() const { return F_.degree == 1; }

  void require_q(const std::string& what) const {
    if (!over_q()) throw Error("config", "unsupported: " + what + " requires field.D = 1");
  }

  const EichlerOrder& eichler(int m) {
    auto it = E_.find(m);
    if (it != E_.end()) return it->second;
    EichlerOrder E;
    if (over_q()) {
      E = standard_eichler_order(B_, O_, theta_, cfg_.nplus, cfg_.p, m);
    } else {
      if (m != 0 || cfg_.nplus != 1) throw Error("config", "unsupported: Eichler level over field.D != 1");
      E.L = O_;
      E.maximal = O_;
      E.nplus = 1;
      E.p = 0;
    }
    return E_.emplace(m, std::move(E)).first->second;
  }

  std::map<Int, int> level(int m) const { return over_q() ? level_exponents(cfg_.nplus, cfg_.p, m) : std::map<Int, int>{}; }

  const ClassSet& class_set(int m) {
    auto it = cs_.find(m);
    if (it != cs_.end()) return it->second;
    const EichlerOrder& E = eichler(m);
    std::ostringstream key;
    key << "classset;D=" << cfg_.D << ";delta=" << field_element(cfg_.delta).a << "," << field_element(cfg_.delta).b
        << ";beta=" << B_.beta.a << "," << B_.beta.b << ";n+=" << cfg_.nplus << ";n-=" << cfg_.nminus
        << ";p=" << cfg_.p << ";m=" << m;
    Rat mass = eichler_mass(B_, level(m));
    PrimeIdeal v = traversal_prime(B_, over_q() ? E.level() : Int(1));
    return cs_.emplace(m, cache_.get(key.str(), B_, E.L, mass, v)).first->second;
  }

  OrientedClassSet& unoriented(int m) {
    auto it = X_.find(m);
    if (it == X_.end()) it = X_.emplace(m, make_oriented(B_, eichler(m), class_set(m), false)).first;
    return it->second;
  }

  PointContext& points(int m) {
    require_q("Heegner points");
    auto it = ctx_.find(m);
    if (it == ctx_.end())
      it = ctx_.emplace(m, std::make_unique<PointContext>(make_point_context(B_, eichler(m), class_set(m)))).first;
    return *it->second;
  }

  ThetaTower& tower(int M) {
    auto it = tw_.find(M);
    if (it != tw_.end()) return *it->second;
    if (cfg_.eigenvalues.empty()) throw Error("config", "form.eigenvalues: required for theta elements");
    auto T = std::make_unique<ThetaTower>(make_theta_tower(points(M), cfg_.k, cfg_.eigenvalues));
    return *tw_.emplace(M, std::move(T)).first->second;
  }

 private:
  RunConfig cfg_;
  ClassSetCache cache_;
  TotallyRealField F_;
  CMExtension K_;
  QuaternionAlgebra B_;
  Lattice O_;
  KElement theta_;
  std::map<int, EichlerOrder> E_;
  std::map<int, ClassSet> cs_;
  std::map<int, OrientedClassSet> X_;
  std::map<int, std::unique_ptr<PointContext>> ctx_;
  std::map<int, std::unique_ptr<ThetaTower>> tw_;
};

// ---------------------------------------------------------------------------
// Reports

struct Report {
  json result = json::object();
  json checks = json::array();

  void check(const std::string& name, bool pass) { checks.push_back({{"name", name}, {"pass", pass}}); }
  void add(const std::string& prefix, const CheckReport& r) {
    for (auto& [n, ok] : r.checks) check(prefix + " " + n, ok);
  }
  bool ok() const {
    for (auto& c : checks)
      if (!c.at("pass").get<bool>()) return false;
    return true;
  }
};

inline json int_json(const Int& x) { return x.fits_slong_p() ? json(x.get_si()) : json(x.get_str()); }

inline json field_json(const FieldElement& x) {
  if (x.b == 0) return x.a.get_str();
  return json::array({x.a.get_str(), x.b.get_str()});
}

inline json quat_json(const QuaternionAlgebra& B, const QuatElement& q) {
  json out = json::array();
  for (auto& x : B.to_vec(q)) out.push_back(x.get_str());
  return out;
}

inline json matrix_json(const IMat& M) {
  json out = json::array();
  for (auto& r : M) {
    json row = json::array();
    for (auto& x : r) row.push_back(int_json(x));
    out.push_back(row);
  }
  return out;
}

inline json config_json(const Session& S) {
  const auto& c = S.config();
  json j;
  j["field.D"] = c.D;
  j["quat.beta"] = field_json(S.algebra().beta);
  j["quat.n_plus"] = int_json(c.nplus);
  j["quat.n_minus"] = int_json(c.nminus);
  j["prime.p"] = int_json(c.p);
  j["precision.k"] = c.k;
  return j;
}

inline std::vector<int> class_levels(const Session& S) {
  std::vector<int> ms{0};
  if (S.over_q())
    for (int m : S.config().depths) ms.push_back(m);
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  return ms;
}

inline void run_classset(Session& S, Report& R) {
  json out = json::array();
  for (int m : class_levels(S)) {
    const ClassSet& cs = S.class_set(m);
    json w = json::array();
    for (auto x : cs.weights) w.push_back(x);
    out.push_back({{"m", m}, {"classes", cs.ideals.size()}, {"mass", cs.mass.get_str()}, {"weights", w}});
    R.check("mass m=" + std::to_string(m), cs.weighted_count() == cs.mass);
  }
  R.result["classset"] = out;
}

inline void run_brandt(Session& S, Report& R, const std::vector<Int>& vs, int m) {
  if (!S.over_q() && m != 0) throw Error("config", "unsupported: Eichler level over field.D != 1");
  OrientedClassSet& X = S.unoriented(m);
  const ClassSet& cs = X.cs;
  const auto& F = S.algebra().F();
  json out = json::object();
  std::vector<IMat> mats;
  std::vector<std::string> names;
  for (auto& q : vs)
    for (auto& v : F.primes_above(q)) {
      if (S.over_q() && S.level(m).count(q)) continue;
      bool ram = false;
      for (auto& w : S.algebra().ramified) ram = ram || w == v;
      if (ram) continue;
      IMat M = brandt_matrix(X, v);
      std::string name = "T_" + v.norm().get_str() + (F.degree == 1 ? "" : "(" + v.gen.a.get_str() + (v.gen.b < 0 ? "" : "+") + v.gen.b.get_str() + "w)");
      bool rows = true;
      for (auto& r : M) {
        Int s = 0;
        for (auto& x : r) s += x;
        rows = rows && s == v.norm() + 1;
      }
      bool sym = true;
      for (size_t i = 0; i < M.size(); ++i)
        for (size_t j = 0; j < M.size(); ++j)
          sym = sym && Int(cs.weights[j]) * M[i][j] == Int(cs.weights[i]) * M[j][i];
      R.check(name + " row sums", rows);
      R.check(name + " weighted symmetry", sym);
      out[name] = matrix_json(M);
      mats.push_back(M);
      names.push_back(name);
    }
  for (size_t a = 0; a < mats.size(); ++a)
    for (size_t b = a + 1; b < mats.size(); ++b)
      R.check(names[a] + " " + names[b] + " commute", mul(mats[a], mats[b]) == mul(mats[b], mats[a]));
  R.result["brandt"] = {{"m", m}, {"matrices", out}};
}

inline void run_embeddings(Session& S, Report& R) {
  S.require_q("embeddings");
  const auto& c = S.config();
  const auto& K = S.algebra().K;
  json out = json::array();
  for (int m : c.depths)
    for (auto& cc : c.conductors) {
      PointContext& C = S.points(m);
      Int cond = cc * C.pm;
      auto O = order_of_conductor(K, cond);
      auto G = picard_group(K, O);
      Int ded = dedekind_cardinality(K, O, 1);
      GrossPoint P = heegner_point(C, cc, 0);
      std::string tag = "c=" + cc.get_str() + " m=" + std::to_string(m);
      R.check("dedekind " + tag, Int(G.cardinality()) == ded);
      R.check("optimal " + tag, is_optimal(C, P, cond));
      out.push_back({{"c", int_json(cc)},
                     {"m", m},
                     {"conductor", int_json(cond)},
                     {"picard", G.cardinality()},
                     {"class", P.k},
                     {"phi_theta", quat_json(C.B, P.phi)}});
    }
  R.result["embeddings"] = out;
}

inline void run_points(Session& S, Report& R, const std::vector<Int>& cs, const std::vector<int>& ns,
                       const std::vector<int>& ms) {
  S.require_q("Heegner points");
  json out = json::array();
  for (int m : ms)
    for (auto& c : cs)
      for (int n : ns) {
        PointContext& C = S.points(m);
        GrossPoint P = heegner_point(C, c, n);
        Int cond = c * pow(C.p, (unsigned long)(n + m));
        std::string tag = "c=" + c.get_str() + " n=" + std::to_string(n) + " m=" + std::to_string(m);
        bool divisors = true;
        for (auto& [q, e] : factor(cond)) divisors = divisors && !is_optimal(C, P, cond / q);
        R.check("optimal " + tag, is_optimal(C, P, cond));
        R.check("not optimal below " + tag, divisors);
        R.check("level condition " + tag, p_level_condition(C, P, n + m));
        out.push_back({{"c", int_json(c)},
                       {"n", n},
                       {"m", m},
                       {"class", P.k},
                       {"orientation", int_json(P.o)},
                       {"phi_theta", quat_json(C.B, P.phi)}});
      }
  R.result["points"] = out;
}

struct VerifySelection {
  bool horizontal = false, vertical = false, galois = false, euler = false;
  bool any() const { return horizontal || vertical || galois || euler; }
};

inline void run_verify(Session& S, Report& R, VerifySelection sel) {
  S.require_q("verification");
  const auto& c = S.config();
  const auto& K = S.algebra().K;
  if (!sel.any()) sel = {true, true, true, true};
  auto inert_ok = [&](const Int& cc, const Int& v) { return cc % v != 0 && v != c.p && K.splitting(v) == -1; };
  if (sel.horizontal)
    for (int m : c.depths)
      for (auto& cc : c.conductors) {
        if (cc > 2) continue;
        R.add("horizontal c=" + cc.get_str() + " m=" + std::to_string(m), verify_horizontal_p(S.points(m), cc, 1));
        if (m == c.depths.front())
          for (auto& v : c.euler_primes)
            if (inert_ok(cc, v))
              R.add("horizontal c=" + cc.get_str() + " v=" + v.get_str(), verify_horizontal_v(S.points(m), cc, v));
      }
  if (sel.vertical)
    for (int m : c.depths)
      if (m >= 2)
        for (auto& cc : c.conductors)
          if (cc <= 2)
            R.add("vertical c=" + cc.get_str() + " m=" + std::to_string(m), verify_vertical(S.points(m - 1), S.points(m), cc));
  if (sel.galois)
    for (int m : c.depths) R.add("galois m=" + std::to_string(m), verify_galois_compat(S.points(m), 1));
  if (sel.euler)
    for (int M : c.depths)
      for (auto& cc : c.conductors)
        for (auto& v : c.euler_primes) {
          if (!inert_ok(cc, v) || cc * v > 10) continue;
          R.add("euler M=" + std::to_string(M) + " c=" + cc.get_str() + " v=" + v.get_str(),
                verify_euler_relations(S.tower(M), cc, v));
        }
}

inline json group_ring_json(const GroupRingElement& a) {
  json j = json::object();
  for (size_t i = 0; i < a.size(); ++i) j[std::to_string(i)] = int_json(a.c[i]);
  return j;
}

inline std::vector<ThetaElement> theta_sequence(Session& S, int nmax) {
  S.require_q("theta elements");
  std::vector<ThetaElement> th;
  for (int n = 0; n <= nmax; ++n) th.push_back(theta_element(S.tower(S.config().theta_depth), n));
  return th;
}

inline void run_theta(Session& S, Report& R, int nmax) {
  auto th = theta_sequence(S, nmax);
  ThetaTower& Tw = S.tower(S.config().theta_depth);
  json out = json::array();
  for (auto& t : th) out.push_back({{"n", t.n}, {"coefficients", group_ring_json(t.theta)}});
  for (size_t n = 0; n + 1 < th.size(); ++n)
    R.check("compatibility n=" + std::to_string(n), theta_compatibility(th[n], th[n + 1]));
  // one global unit relating the tower to the brute-force Gross sums
  json oracle = json::array();
  std::optional<Int> unit;
  for (Int c0 : {Int(1), Int(2)}) {
    if (c0 != 1 && Tw.C->B.K.splitting(c0) != -1) continue;
    if (std::find(S.config().conductors.begin(), S.config().conductors.end(), c0) == S.config().conductors.end()) continue;
    GrossSumOracle o = gross_sum_oracle(Tw, c0);
    Int t1 = tower_gross_sum(Tw, c0, false), t2 = tower_gross_sum(Tw, c0, true);
    if (!unit && mod(o.trivial, Tw.p()) != 0) unit = mod(t1 * invmod(o.trivial, Tw.R.m), Tw.R.m);
    if (unit) {
      R.check("oracle trivial c0=" + c0.get_str(), t1 == mod(*unit * o.trivial, Tw.R.m));
      R.check("oracle quadratic c0=" + c0.get_str(), t2 == mod(*unit * o.quadratic, Tw.R.m));
    }
    oracle.push_back({{"c", int_json(c0 * Tw.C->pm)},
                      {"embeddings", o.embeddings},
                      {"orbit", o.orbit},
                      {"trivial", int_json(o.trivial)},
                      {"quadratic", int_json(o.quadratic)}});
  }
  if (!th.empty()) R.check("theta_0 equals the Gross sum", th[0].theta.c[0] == tower_gross_sum(Tw, 1, false));
  R.check("oracle unit recorded", unit.has_value());
  R.result["theta"] = {{"depth", Tw.M()},
                       {"modulus", int_json(Tw.R.m)},
                       {"alpha", int_json(Tw.ef.alpha)},
                       {"elements", out},
                       {"oracle", oracle},
                       {"unit", unit ? int_json(*unit) : json(nullptr)}};
}

inline void run_lfun(Session& S, Report& R, int n) {
  auto th = theta_sequence(S, n);
  auto L = two_variable_L(th.back());
  R.check("L star-fixed", star(L.L) == L.L);
  Int t0 = specialize_character(th.back().theta, 0).c[0];
  R.check("trivial character is a square", specialize_character(L.L, 0).c[0] == mod(t0 * t0, L.L.mod));
  json chars = json::array();
  for (size_t s = 1; s < L.L.size(); s *= L.L.p.get_ui()) {
    auto a = specialize_character(L.L, Int(s)), b = specialize_character(th.back().theta, Int(s)),
         bb = specialize_character(th.back().theta, -Int(s));
    R.check("chi_" + std::to_string(s) + "(L) = chi(theta) chi-bar(theta)", a == b * bb);
    json cv = json::array();
    for (auto& x : a.c) cv.push_back(int_json(x));
    chars.push_back({{"s", s}, {"order", int_json(pow(L.L.p, (unsigned long)a.j))}, {"value", cv}});
  }
  R.result["lfun"] = {{"n", n}, {"coefficients", group_ring_json(L.L)}, {"characters", chars}};
}

}  // namespace heegner
