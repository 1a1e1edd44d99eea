#pragma once

// Classical oracle problems (Simon, flagged Simon, generalized RFS with
// inner-product f) and the black-box transformation constructions:
// output permutation, flagged-from-plain simulation, concatenated and
// uniform lifting.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrlab/bitstring.hpp"
#include "qrlab/rng.hpp"

namespace qrlab {

// ---------------------------------------------------------------------------
// Simon's problem

struct SimonInstance {
  int n = 0;
  BitString s;                       // secret shift, width n
  std::vector<std::uint32_t> table;  // f over {0,1}^n, size 2^n

  BitString eval(const BitString& x) const {
    if (x.width() != n) throw std::invalid_argument("SimonInstance: query width");
    return BitString(table[x.word()], n);
  }

  /// f(x) = f(y) <=> x = y (+) s, and the image has the right size.
  bool promise_holds() const {
    std::size_t size = std::size_t{1} << n;
    if (table.size() != size) return false;
    std::vector<char> seen(size, 0);
    std::size_t distinct = 0;
    for (std::size_t x = 0; x < size; ++x) {
      if (table[x] >= size) return false;
      if (table[x] != table[x ^ s.word()]) return false;
      if (!seen[table[x]]) {
        seen[table[x]] = 1;
        ++distinct;
      }
    }
    std::size_t expected = s.all_zero() ? size : size / 2;
    return distinct == expected;
  }
};

/// Uniform instance: cosets {x, x+s} enumerated by ascending representative,
/// images drawn as a seeded random injection into {0,1}^n. s=0 (permutation
/// table) only when allowed.
inline SimonInstance gen_simon(int n, std::uint64_t seed,
                               std::optional<BitString> s_opt = std::nullopt,
                               bool allow_zero = false) {
  if (n < 1 || n > 20) throw std::invalid_argument("gen_simon: n out of desk-scale range");
  Rng rng(seed);
  std::uint64_t size = std::uint64_t{1} << n;
  BitString s = BitString::zeros(n);
  if (s_opt) {
    if (s_opt->width() != n) throw std::invalid_argument("gen_simon: secret width");
    s = *s_opt;
    if (s.all_zero() && !allow_zero) throw std::invalid_argument("gen_simon: zero secret not allowed");
  } else {
    do {
      s = BitString(rng.below(size), n);
    } while (s.all_zero() && !allow_zero);
  }

  std::vector<std::uint32_t> images(size);
  for (std::uint64_t v = 0; v < size; ++v) images[v] = static_cast<std::uint32_t>(v);
  rng.shuffle(images);

  SimonInstance inst;
  inst.n = n;
  inst.s = s;
  inst.table.assign(size, 0);
  std::size_t next_image = 0;
  std::vector<char> assigned(size, 0);
  for (std::uint64_t x = 0; x < size; ++x) {
    if (assigned[x]) continue;
    std::uint32_t img = images[next_image++];
    inst.table[x] = img;
    assigned[x] = 1;
    std::uint64_t partner = x ^ s.word();
    inst.table[partner] = img;
    assigned[partner] = 1;
  }
  return inst;
}

struct FlaggedAnswer {
  BitString value;
  int flag = 0;
  bool zero_candidate = false;  // set by the plain-oracle simulation when the
                                // x = 0 check is inconclusive
};

/// Flagged evaluation (f(x), b (+) [x = s]). Plain evaluation ignores the flag.
inline FlaggedAnswer simon_eval(const SimonInstance& inst, const BitString& x, int b) {
  FlaggedAnswer a;
  a.value = inst.eval(x);
  a.flag = (x == inst.s) ? (b ^ 1) : b;
  return a;
}

/// New instance with table' = h o table; same secret, promise preserved.
inline SimonInstance permute_outputs(const SimonInstance& inst,
                                     const std::vector<std::uint32_t>& h) {
  std::size_t size = std::size_t{1} << inst.n;
  if (h.size() != size) throw std::invalid_argument("permute_outputs: permutation size");
  std::vector<char> seen(size, 0);
  for (auto v : h) {
    if (v >= size || seen[v]) throw std::invalid_argument("permute_outputs: not a bijection");
    seen[v] = 1;
  }
  SimonInstance out = inst;
  for (std::size_t x = 0; x < size; ++x) out.table[x] = h[inst.table[x]];
  return out;
}

// ---------------------------------------------------------------------------
// Oracle handles: answer function plus a monotone query counter.

template <typename Q, typename A>
class OracleHandle {
 public:
  OracleHandle() = default;
  explicit OracleHandle(std::function<A(const Q&)> fn) : fn_(std::move(fn)) {}

  A query(const Q& q) {
    ++count_;
    return fn_(q);
  }

  std::uint64_t queries() const { return count_; }

  void set(std::function<A(const Q&)> fn) { fn_ = std::move(fn); }

 private:
  std::function<A(const Q&)> fn_;
  std::uint64_t count_ = 0;
};

using PlainSimonOracle = OracleHandle<BitString, BitString>;

struct FlaggedQuery {
  BitString x;
  int b = 0;
};

using FlaggedSimonOracle = OracleHandle<FlaggedQuery, FlaggedAnswer>;

inline PlainSimonOracle make_plain_oracle(const SimonInstance& inst) {
  return PlainSimonOracle([inst](const BitString& x) { return inst.eval(x); });
}

inline FlaggedSimonOracle make_flagged_oracle(const SimonInstance& inst) {
  return FlaggedSimonOracle(
      [inst](const FlaggedQuery& q) { return simon_eval(inst, q.x, q.b); });
}

/// Simulate the flagged oracle from a plain one: answer f(x) by direct query,
/// decide the flag by comparing f(t) and f(t+x) for t = 0. Three plain
/// queries per flagged query. With the s != 0 promise the x = 0 case is
/// forced to flag 0; without it the answer is marked zero_candidate.
inline FlaggedSimonOracle simulate_flagged_from_plain(PlainSimonOracle& plain, int n,
                                                      bool promise_nonzero = true) {
  return FlaggedSimonOracle([&plain, n, promise_nonzero](const FlaggedQuery& q) {
    if (q.x.width() != n) throw std::invalid_argument("flagged query width");
    FlaggedAnswer a;
    a.value = plain.query(q.x);
    BitString t = BitString::zeros(n);
    BitString ft = plain.query(t);
    BitString ftx = plain.query(t ^ q.x);
    if (q.x.all_zero()) {
      if (promise_nonzero) {
        a.flag = q.b;  // x = 0 != s
      } else {
        a.flag = q.b ^ 1;  // correct iff s = 0; caller must apply the fallback
        a.zero_candidate = true;
      }
    } else {
      a.flag = (ft == ftx) ? (q.b ^ 1) : q.b;
    }
    return a;
  });
}

// ---------------------------------------------------------------------------
// Generalized RFS (f = inner product)

using RfsPath = std::vector<BitString>;  // local labels from the root, depth = size

enum class Tri { Zero = 0, One = 1, Bot = 2 };

inline std::string tri_str(Tri t) { return t == Tri::Bot ? "bot" : (t == Tri::One ? "1" : "0"); }

struct RfsQuery {
  RfsPath path;                    // x_1..x_k (k = 0 for the root query)
  std::optional<BitString> guess;  // required whenever it is not a leaf query
  bool leaf_flag = false;          // set: unconditional leaf query, |path| = l
};

struct RfsInstance {
  int n = 0;
  int l = 0;
  std::map<RfsPath, BitString> secret;  // defined on all path-labels of length 0..l-1
  int hidden_bit = 0;

  const BitString& secret_at(const RfsPath& p) const {
    auto it = secret.find(p);
    if (it == secret.end()) throw std::invalid_argument("RfsInstance: unknown path label");
    return it->second;
  }
};

/// All path-labels of length 0..l-1, depth ascending then numeric within depth.
inline std::vector<RfsPath> rfs_path_labels(int n, int l) {
  std::vector<RfsPath> out;
  std::vector<RfsPath> level{RfsPath{}};
  for (int depth = 0; depth < l; ++depth) {
    for (const auto& p : level) out.push_back(p);
    if (depth + 1 >= l) break;
    std::vector<RfsPath> next;
    for (const auto& p : level) {
      for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
        RfsPath q = p;
        q.emplace_back(v, n);
        next.push_back(std::move(q));
      }
    }
    level = std::move(next);
  }
  return out;
}

inline RfsInstance gen_rfs(int n, int l, std::uint64_t seed) {
  if (n < 1 || l < 1) throw std::invalid_argument("gen_rfs: shape");
  RfsInstance inst;
  inst.n = n;
  inst.l = l;
  Rng rng(seed);
  for (const auto& p : rfs_path_labels(n, l))
    inst.secret.emplace(p, BitString(rng.below(std::uint64_t{1} << n), n));
  inst.hidden_bit = rng.bit();
  return inst;
}

/// The oracle O_gRFS. Root query (k=0): b_empty iff guess = s(empty).
/// Internal query (0<k<l): f(s(x_1..x_{k-1}), x_k) iff guess = s(x_1..x_k).
/// Leaf query (k=l, leaf_flag): f(s(x_1..x_{l-1}), x_l) unconditionally.
inline Tri rfs_query(const RfsInstance& inst, const RfsQuery& q) {
  for (const auto& x : q.path)
    if (x.width() != inst.n) throw std::invalid_argument("rfs_query: label width");
  std::size_t k = q.path.size();
  if (q.leaf_flag) {
    if (static_cast<int>(k) != inst.l) throw std::invalid_argument("rfs_query: leaf path length");
    if (q.guess) throw std::invalid_argument("rfs_query: leaf query takes no guess");
    RfsPath parent(q.path.begin(), q.path.end() - 1);
    return dot2(inst.secret_at(parent), q.path.back()) ? Tri::One : Tri::Zero;
  }
  if (static_cast<int>(k) >= inst.l) throw std::invalid_argument("rfs_query: path too long");
  if (!q.guess) throw std::invalid_argument("rfs_query: guess required");
  if (q.guess->width() != inst.n) throw std::invalid_argument("rfs_query: guess width");
  if (*q.guess != inst.secret_at(q.path)) return Tri::Bot;
  if (k == 0) return inst.hidden_bit ? Tri::One : Tri::Zero;
  RfsPath parent(q.path.begin(), q.path.end() - 1);
  return dot2(inst.secret_at(parent), q.path.back()) ? Tri::One : Tri::Zero;
}

using RfsOracle = OracleHandle<RfsQuery, Tri>;

inline RfsOracle make_rfs_oracle(const RfsInstance& inst) {
  return RfsOracle([inst](const RfsQuery& q) { return rfs_query(inst, q); });
}

// ---------------------------------------------------------------------------
// Lifting: embed an unknown RFS(n,l) inside an RFS(2n,l).

/// Deviations are keyed by path-labels of the LIFTED (2n-bit) instance; the
/// root label is excluded so the embedded root secret survives in the suffix.
/// Duplicate keys in the input list xor-compose.
struct LiftSpec {
  std::vector<std::pair<RfsPath, BitString>> deviations;
};

namespace detail {

inline RfsPath half_path(const RfsPath& p, int n, bool take_suffix) {
  RfsPath out;
  out.reserve(p.size());
  for (const auto& x : p) {
    if (x.width() != 2 * n) throw std::invalid_argument("lift: lifted label width");
    out.push_back(take_suffix ? x.suffix_from(n) : x.prefix(n));
  }
  return out;
}

inline std::map<RfsPath, BitString> fold_deviations(const LiftSpec& spec, int lifted_n, int l) {
  std::map<RfsPath, BitString> folded;
  for (const auto& [path, d] : spec.deviations) {
    if (path.empty()) throw std::invalid_argument("lift: deviation at the root is forbidden");
    if (static_cast<int>(path.size()) >= l)
      throw std::invalid_argument("lift: deviation path outside the secret domain");
    if (d.width() != lifted_n) throw std::invalid_argument("lift: deviation width");
    auto [it, fresh] = folded.emplace(path, d);
    if (!fresh) it->second = it->second ^ d;
  }
  return folded;
}

}  // namespace detail

/// Uniform lifting. The effective lifted secret is
///   s''(x) = p(pref parts) o s(suff parts) (+) d(x),
/// realized черthrough the known instance plus black-box calls: the validity
/// criterion and the inner-product occurrence are rewritten per the deviation
/// map. One unknown-oracle call serves both (the suffix-validity query also
/// returns the parent-level inner product), within the <=2 calls budget.
inline RfsOracle lift_uniform(RfsOracle& unknown, const RfsInstance& known,
                              const LiftSpec& spec) {
  const int n = known.n;
  const int l = known.l;
  auto folded = detail::fold_deviations(spec, 2 * n, l);

  auto dev_at = [folded, n](const RfsPath& path) {
    auto it = folded.find(path);
    return it == folded.end() ? BitString::zeros(2 * n) : it->second;
  };

  return RfsOracle([&unknown, known, dev_at, n, l](const RfsQuery& q) -> Tri {
    for (const auto& x : q.path)
      if (x.width() != 2 * n) throw std::invalid_argument("lifted query: label width");
    std::size_t k = q.path.size();

    if (q.leaf_flag) {
      if (static_cast<int>(k) != l) throw std::invalid_argument("lifted query: leaf length");
      RfsPath parent(q.path.begin(), q.path.end() - 1);
      RfsQuery sub;
      sub.path = detail::half_path(q.path, n, true);
      sub.leaf_flag = true;
      Tri inner = unknown.query(sub);
      int value = (inner == Tri::One ? 1 : 0);
      value ^= dot2(known.secret_at(detail::half_path(parent, n, false)), q.path.back().prefix(n));
      value ^= dot2(dev_at(parent), q.path.back());  // twirl on the parent's secret
      return value ? Tri::One : Tri::Zero;
    }

    if (static_cast<int>(k) >= l) throw std::invalid_argument("lifted query: path too long");
    if (!q.guess || q.guess->width() != 2 * n)
      throw std::invalid_argument("lifted query: guess");

    // Query-validity criterion against s'(x) (+) d: split into the known
    // prefix test and one unknown-oracle suffix test.
    BitString target = *q.guess ^ dev_at(q.path);
    RfsPath pref_path = detail::half_path(q.path, n, false);
    if (target.prefix(n) != known.secret_at(pref_path)) return Tri::Bot;

    RfsQuery sub;
    sub.path = detail::half_path(q.path, n, true);
    sub.guess = target.suffix_from(n);
    Tri inner = unknown.query(sub);
    if (inner == Tri::Bot) return Tri::Bot;

    if (k == 0) return inner;  // root: the hidden bit rides through unchanged

    RfsPath parent(q.path.begin(), q.path.end() - 1);
    int value = (inner == Tri::One ? 1 : 0);
    value ^= dot2(known.secret_at(detail::half_path(parent, n, false)), q.path.back().prefix(n));
    value ^= dot2(dev_at(parent), q.path.back());
    return value ? Tri::One : Tri::Zero;
  });
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string hex_of(std::uint64_t v, int width_bits) {
  int digits = (width_bits + 3) / 4;
  static const char* hexc = "0123456789abcdef";
  std::string s(static_cast<std::size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = hexc[v & 0xf];
    v >>= 4;
  }
  return s;
}

inline std::uint64_t hex_to_u64(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

inline nlohmann::ordered_json to_json(const SimonInstance& inst, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["kind"] = "simon";
  j["n"] = inst.n;
  j["s"] = inst.s.str();
  j["seed"] = seed;
  std::string hex;
  for (auto v : inst.table) hex += hex_of(v, inst.n);
  j["table_hex"] = hex;
  return j;
}

inline SimonInstance simon_from_json(const nlohmann::json& j) {
  SimonInstance inst;
  inst.n = j.at("n").get<int>();
  inst.s = BitString::parse(j.at("s").get<std::string>());
  std::string hex = j.at("table_hex").get<std::string>();
  int digits = (inst.n + 3) / 4;
  std::size_t size = std::size_t{1} << inst.n;
  if (hex.size() != size * static_cast<std::size_t>(digits))
    throw std::invalid_argument("simon_from_json: table size");
  inst.table.resize(size);
  for (std::size_t i = 0; i < size; ++i)
    inst.table[i] =
        static_cast<std::uint32_t>(hex_to_u64(hex.substr(i * static_cast<std::size_t>(digits),
                                                         static_cast<std::size_t>(digits))));
  if (!inst.promise_holds()) throw std::invalid_argument("simon_from_json: promise violated");
  return inst;
}

inline std::string rfs_path_key(const RfsPath& p) {
  std::string key;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) key += ',';
    key += p[i].str();
  }
  return key;
}

inline nlohmann::ordered_json to_json(const RfsInstance& inst, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["kind"] = "rfs";
  j["n"] = inst.n;
  j["l"] = inst.l;
  j["hidden_bit"] = inst.hidden_bit;
  j["seed"] = seed;
  nlohmann::ordered_json sec = nlohmann::ordered_json::object();
  for (const auto& p : rfs_path_labels(inst.n, inst.l))
    sec[rfs_path_key(p)] = inst.secret_at(p).str();
  j["secret"] = sec;
  return j;
}

inline RfsInstance rfs_from_json(const nlohmann::json& j) {
  RfsInstance inst;
  inst.n = j.at("n").get<int>();
  inst.l = j.at("l").get<int>();
  inst.hidden_bit = j.at("hidden_bit").get<int>();
  for (const auto& [key, val] : j.at("secret").items()) {
    RfsPath p;
    if (!key.empty()) {
      std::stringstream ss(key);
      std::string part;
      while (std::getline(ss, part, ',')) p.push_back(BitString::parse(part));
    }
    inst.secret.emplace(std::move(p), BitString::parse(val.get<std::string>()));
  }
  return inst;
}

}  // namespace qrlab
