#pragma once

// Task environments built from the oracle problems: the Simon families
// M0 (whole-query actions), M1 (bit actions, layer-tagged prefix states)
// and M2_rg (adds the root-only random jump), and the RFS families M1
// (block actions), M2 (bit actions, padded to strict episodes) and M3_rg.
//
// State labels are layer-tagged elapsed-action strings; root states carry
// the last oracle output and share outbound dynamics, which keeps the
// environments fully observable while the deterministic parts stay
// strictly episodic.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrlab/bitstring.hpp"
#include "qrlab/mdp.hpp"
#include "qrlab/oracles.hpp"
#include "qrlab/rng.hpp"

namespace qrlab {

enum class EnvVariant { SimonM0, SimonM1, SimonM2rg, RfsM1, RfsM2, RfsM3rg };

inline std::string variant_name(EnvVariant v) {
  switch (v) {
    case EnvVariant::SimonM0: return "simon_m0";
    case EnvVariant::SimonM1: return "simon_m1";
    case EnvVariant::SimonM2rg: return "simon_m2_rg";
    case EnvVariant::RfsM1: return "rfs_m1";
    case EnvVariant::RfsM2: return "rfs_m2";
    case EnvVariant::RfsM3rg: return "rfs_m3_rg";
  }
  throw std::logic_error("variant_name");
}

inline EnvVariant variant_from_name(const std::string& s) {
  for (EnvVariant v : {EnvVariant::SimonM0, EnvVariant::SimonM1, EnvVariant::SimonM2rg,
                       EnvVariant::RfsM1, EnvVariant::RfsM2, EnvVariant::RfsM3rg})
    if (variant_name(v) == s) return v;
  throw std::invalid_argument("unknown env variant: " + s);
}

enum class NodeKind : std::uint8_t { Root, Path, Pad };

/// Environment state: layer index plus either the elapsed action string
/// (Path), a padding depth (Pad), or the root label id (Root).
struct Node {
  NodeKind kind = NodeKind::Root;
  int layer = 0;
  std::uint64_t code = 0;  // Root: label id; Path: packed action symbols

  bool operator==(const Node& o) const {
    return kind == o.kind && layer == o.layer && code == o.code;
  }
  bool operator<(const Node& o) const {
    if (kind != o.kind) return kind < o.kind;
    if (layer != o.layer) return layer < o.layer;
    return code < o.code;
  }
};

// Root label ids.
inline constexpr std::uint64_t kRootInit = 0;
inline constexpr std::uint64_t kRootPad = 1;
inline constexpr std::uint64_t kRootBot = 2;
inline constexpr std::uint64_t kRootOutBase = 3;  // + output value

struct EnvState {
  Node node;
  std::uint64_t step_count = 0;
  std::uint64_t episode_count = 0;
};

struct StepResult {
  Node next;
  int reward = 0;
};

struct EnvOptions {
  bool label_permutation = false;
  std::uint64_t label_permutation_seed = 0;
};

class EnvSpec {
 public:
  static EnvSpec build(const SimonInstance& inst, EnvVariant variant,
                       std::uint64_t instance_seed = 0, EnvOptions opts = {}) {
    if (variant != EnvVariant::SimonM0 && variant != EnvVariant::SimonM1 &&
        variant != EnvVariant::SimonM2rg)
      throw std::invalid_argument("build_env: Simon problem with RFS variant");
    EnvSpec e;
    e.variant_ = variant;
    e.simon_ = inst;
    e.n_ = inst.n;
    e.instance_seed_ = instance_seed;
    e.eta_ = (variant == EnvVariant::SimonM0) ? 1 : inst.n;
    if (variant == EnvVariant::SimonM2rg && inst.n < 2)
      throw std::invalid_argument("build_env: M2_rg needs n >= 2");
    e.opts_ = opts;
    if (opts.label_permutation) e.build_label_permutation();
    return e;
  }

  static EnvSpec build(const RfsInstance& inst, EnvVariant variant,
                       std::uint64_t instance_seed = 0, EnvOptions opts = {}) {
    if (variant != EnvVariant::RfsM1 && variant != EnvVariant::RfsM2 &&
        variant != EnvVariant::RfsM3rg)
      throw std::invalid_argument("build_env: RFS problem with Simon variant");
    EnvSpec e;
    e.variant_ = variant;
    e.rfs_ = inst;
    e.n_ = inst.n;
    e.l_ = inst.l;
    e.instance_seed_ = instance_seed;
    e.eta_ = (variant == EnvVariant::RfsM1) ? 0 : inst.l * inst.n + 2;
    if (variant == EnvVariant::RfsM3rg && inst.n < 2)
      throw std::invalid_argument("build_env: M3_rg needs n >= 2");
    e.opts_ = opts;
    if (opts.label_permutation) e.build_label_permutation();
    return e;
  }

  EnvVariant variant() const { return variant_; }
  bool is_simon() const { return simon_.has_value(); }
  const SimonInstance& simon() const { return *simon_; }
  const RfsInstance& rfs() const { return *rfs_; }
  int n() const { return n_; }
  int l() const { return l_; }
  std::uint64_t instance_seed() const { return instance_seed_; }
  const EnvOptions& options() const { return opts_; }

  /// Episode length of the deterministic part; 0 = not strictly episodic.
  int eta() const { return eta_; }

  bool has_rg() const {
    return variant_ == EnvVariant::SimonM2rg || variant_ == EnvVariant::RfsM3rg;
  }

  int jump_max() const { return n_ / 2; }  // rg lands on layers 1..n/2

  // Action alphabet. Simon M0: whole queries. Simon M1/M2: 0,1(,rg).
  // RFS M1: blocks, q, ql. RFS M2/M3: 0,1,q(,rg).
  int num_actions() const {
    switch (variant_) {
      case EnvVariant::SimonM0: return 1 << n_;
      case EnvVariant::SimonM1: return 2;
      case EnvVariant::SimonM2rg: return 3;
      case EnvVariant::RfsM1: return (1 << n_) + 2;
      case EnvVariant::RfsM2: return 3;
      case EnvVariant::RfsM3rg: return 4;
    }
    throw std::logic_error("num_actions");
  }

  bool is_rg_action(int a) const {
    return (variant_ == EnvVariant::SimonM2rg && a == 2) ||
           (variant_ == EnvVariant::RfsM3rg && a == 3);
  }

  std::string action_name(int a) const {
    if (a < 0 || a >= num_actions()) throw std::invalid_argument("action id");
    switch (variant_) {
      case EnvVariant::SimonM0: return BitString(static_cast<std::uint64_t>(a), n_).str();
      case EnvVariant::SimonM1: return a ? "1" : "0";
      case EnvVariant::SimonM2rg: return a == 2 ? "rg" : (a ? "1" : "0");
      case EnvVariant::RfsM1:
        if (a == (1 << n_)) return "q";
        if (a == (1 << n_) + 1) return "ql";
        return BitString(static_cast<std::uint64_t>(a), n_).str();
      case EnvVariant::RfsM2: return a == 2 ? "q" : (a ? "1" : "0");
      case EnvVariant::RfsM3rg:
        return a == 3 ? "rg" : (a == 2 ? "q" : (a ? "1" : "0"));
    }
    throw std::logic_error("action_name");
  }

  Node initial() const { return Node{NodeKind::Root, 0, kRootInit}; }

  EnvState initial_state() const { return EnvState{initial(), 0, 0}; }

  /// One environment step. Deterministic except (root, rg).
  StepResult step(const Node& node, int action, Rng& rng) const {
    if (action < 0 || action >= num_actions()) throw std::invalid_argument("env_step: action");
    if (is_rg_action(action)) {
      if (node.kind == NodeKind::Root) {
        int r = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(jump_max())));
        return StepResult{jump_target(r), 0};
      }
      return StepResult{pad_next(node, action), 0};
    }
    if (node.kind == NodeKind::Pad) return StepResult{pad_next(node, action), 0};
    return deterministic_step(node, action);
  }

  StepResult step(EnvState& st, int action, Rng& rng) const {
    StepResult r = step(st.node, action, rng);
    st.node = r.next;
    st.step_count += 1;
    if (r.next.kind == NodeKind::Root) st.episode_count += 1;
    return r;
  }

  /// Deterministic transition; throws if the action is rg.
  StepResult deterministic_step(const Node& node, int action) const {
    if (is_rg_action(action)) throw std::invalid_argument("deterministic_step: rg");
    if (node.kind == NodeKind::Pad) return StepResult{pad_next(node, action), 0};
    switch (variant_) {
      case EnvVariant::SimonM0: {
        BitString x(static_cast<std::uint64_t>(action), n_);
        int reward = (x == simon_->s) ? 1 : 0;
        return StepResult{root_out(simon_->eval(x).word()), reward};
      }
      case EnvVariant::SimonM1:
      case EnvVariant::SimonM2rg: {
        std::uint64_t prefix = (node.kind == NodeKind::Root) ? 0 : node.code;
        int layer = (node.kind == NodeKind::Root) ? 0 : node.layer;
        std::uint64_t np = prefix | (static_cast<std::uint64_t>(action & 1) << layer);
        if (layer + 1 < n_) return StepResult{Node{NodeKind::Path, layer + 1, np}, 0};
        BitString x(np, n_);
        int reward = (x == simon_->s) ? 1 : 0;
        return StepResult{root_out(simon_->eval(x).word()), reward};
      }
      case EnvVariant::RfsM1: return rfs_m1_step(node, action);
      case EnvVariant::RfsM2:
      case EnvVariant::RfsM3rg: return rfs_m2_step(node, action);
    }
    throw std::logic_error("deterministic_step");
  }

  /// State label, layer-tagged; the optional permutation scrambles the text.
  std::string label(const Node& node) const {
    std::string raw = raw_label(node);
    if (!label_map_) return raw;
    auto it = label_map_->find(raw);
    return it == label_map_->end() ? raw : it->second;
  }

  Node jump_target(int r) const {
    if (r < 1 || r > jump_max()) throw std::invalid_argument("jump layer");
    std::uint64_t code;
    if (is_simon()) {
      code = simon_->s.prefix(r).word();
    } else {
      // Bits of s(empty), one symbol per layer.
      std::uint64_t secret = rfs_->secret_at({}).word();
      code = 0;
      for (int i = 0; i < r; ++i) code |= ((secret >> i) & 1) << (2 * i);
    }
    return Node{NodeKind::Path, r, code};
  }

  /// The unique rewarding action sequence of the deterministic part.
  std::vector<int> rewarding_sequence() const {
    std::vector<int> seq;
    if (is_simon()) {
      if (variant_ == EnvVariant::SimonM0) return {static_cast<int>(simon_->s.word())};
      for (int i = 0; i < n_; ++i) seq.push_back(simon_->s.bit(i));
    } else {
      const BitString& s0 = rfs_->secret_at({});
      if (variant_ == EnvVariant::RfsM1) return {static_cast<int>(s0.word()), 1 << n_};
      for (int i = 0; i < n_; ++i) seq.push_back(s0.bit(i));
      seq.push_back(2);  // q
    }
    return seq;
  }

  // --- deterministic unitary core ------------------------------------------

  /// Bits per action symbol in the unitary realization (rg excluded).
  int action_bits() const {
    switch (variant_) {
      case EnvVariant::SimonM0: return n_;
      case EnvVariant::SimonM1:
      case EnvVariant::SimonM2rg: return 1;
      case EnvVariant::RfsM2:
      case EnvVariant::RfsM3rg: return 2;
      case EnvVariant::RfsM1: break;
    }
    throw std::invalid_argument("not strictly episodic: no unitary core");
  }

  /// Width of the percept register written at step k (1-based; k = eta is the
  /// root output register).
  int percept_bits(int k) const {
    if (k < 1 || k > eta_) throw std::invalid_argument("percept index");
    if (k == eta_) return is_simon() ? n_ : 2;
    return k * action_bits();
  }

  /// Label code after the k-th step, as a function of the first k action
  /// symbols (packed action_bits() per symbol). For k = eta this is the root
  /// output code; RFS uses (valid,value): bot=00, zero=01, one=11.
  std::uint64_t label_code_after(std::uint64_t packed_actions, int k) const {
    if (k < 1 || k > eta_) throw std::invalid_argument("label_code_after: step");
    int ab = action_bits();
    std::uint64_t mask = (k * ab >= 64) ? ~std::uint64_t{0}
                                        : (std::uint64_t{1} << (k * ab)) - 1;
    std::uint64_t prefix = packed_actions & mask;
    if (k < eta_) return prefix;
    if (is_simon()) {
      if (variant_ == EnvVariant::SimonM0) return simon_->table[prefix];
      return simon_->table[prefix];
    }
    Tri ans = resolve_rfs_symbols(prefix, eta_);
    return ans == Tri::Bot ? 0 : (ans == Tri::Zero ? 1 : 3);
  }

  /// Position of the reward step (1-based) in the unitary realization.
  int reward_step_position() const { return is_simon() ? eta_ : n_ + 1; }

  /// Reward bit as a function of the first reward_step_position() symbols.
  int reward_bit(std::uint64_t packed_actions) const {
    int ab = action_bits();
    int pos = reward_step_position();
    if (is_simon()) {
      std::uint64_t mask = (pos * ab >= 64) ? ~std::uint64_t{0}
                                            : (std::uint64_t{1} << (pos * ab)) - 1;
      return (packed_actions & mask) == simon_->s.word() ? 1 : 0;
    }
    // First n symbols are the bits of s(empty), then q.
    for (int i = 0; i < n_; ++i)
      if (((packed_actions >> (2 * i)) & 3) != static_cast<std::uint64_t>(rfs_->secret_at({}).bit(i)))
        return 0;
    return ((packed_actions >> (2 * n_)) & 3) == 2 ? 1 : 0;
  }

  /// True when every non-final percept label equals the elapsed action string
  /// (required by the simplified oraculization mode).
  bool labels_are_prefixes() const { return !opts_.label_permutation; }

  // --- explicit MDP ----------------------------------------------------------

  ExplicitMdp explicit_mdp() const {
    ExplicitMdp mdp;
    mdp.num_actions = num_actions();
    std::map<Node, int> index;
    std::vector<Node> nodes;
    auto intern = [&](const Node& nd) {
      auto [it, fresh] = index.emplace(nd, static_cast<int>(nodes.size()));
      if (fresh) nodes.push_back(nd);
      return it->second;
    };
    intern(initial());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      Node cur = nodes[i];  // copy: the node list grows during interning
      std::vector<std::vector<Arc>> row(static_cast<std::size_t>(mdp.num_actions));
      for (int a = 0; a < mdp.num_actions; ++a) {
        if (is_rg_action(a) && cur.kind == NodeKind::Root) {
          int m = jump_max();
          for (int r = 1; r <= m; ++r) {
            Arc arc;
            arc.next = intern(jump_target(r));
            arc.reward = 0;
            arc.pnum = 1;
            arc.pden = static_cast<std::uint64_t>(m);
            arc.prob = 1.0 / m;
            row[static_cast<std::size_t>(a)].push_back(arc);
          }
          continue;
        }
        StepResult sr = (is_rg_action(a) || cur.kind == NodeKind::Pad)
                            ? StepResult{pad_next(cur, a), 0}
                            : deterministic_step(cur, a);
        Arc arc;
        arc.next = intern(sr.next);
        arc.reward = sr.reward;
        row[static_cast<std::size_t>(a)].push_back(arc);
      }
      mdp.trans.push_back(std::move(row));
    }
    mdp.labels.reserve(nodes.size());
    for (const auto& nd : nodes) mdp.labels.push_back(label(nd));
    return mdp;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["family"] = is_simon() ? "simon" : "rfs";
    j["variant"] = variant_name(variant_);
    j["n"] = n_;
    if (!is_simon()) j["l"] = l_;
    j["seed"] = instance_seed_;
    j["jump_dist"] = has_rg() ? "uniform_first_half" : "none";
    if (opts_.label_permutation) j["label_permutation_seed"] = opts_.label_permutation_seed;
    return j;
  }

  static EnvSpec from_json(const nlohmann::json& j) {
    EnvOptions opts;
    if (j.contains("label_permutation_seed")) {
      opts.label_permutation = true;
      opts.label_permutation_seed = j["label_permutation_seed"].get<std::uint64_t>();
    }
    EnvVariant v = variant_from_name(j.at("variant").get<std::string>());
    std::uint64_t seed = j.at("seed").get<std::uint64_t>();
    int n = j.at("n").get<int>();
    if (j.at("family").get<std::string>() == "simon")
      return build(gen_simon(n, seed), v, seed, opts);
    return build(gen_rfs(n, j.at("l").get<int>(), seed), v, seed, opts);
  }

 private:
  EnvSpec() = default;

  Node root_out(std::uint64_t value) const {
    return Node{NodeKind::Root, 0, kRootOutBase + value};
  }

  // Padding branch for a misplaced rg: full-observability labels carry the
  // complete elapsed action string (2-bit symbols, rg included), so distinct
  // histories keep distinct labels.
  Node pad_next(const Node& node, int action) const {
    int last_layer = eta_ - 1;
    if (variant_ == EnvVariant::SimonM0) return Node{NodeKind::Root, 0, kRootPad};
    int layer = (node.kind == NodeKind::Root) ? 0 : node.layer;
    std::uint64_t code;
    if (node.kind == NodeKind::Pad) {
      code = node.code;
    } else if (node.kind == NodeKind::Root) {
      code = 0;
    } else {
      // Re-encode the path history into 2-bit symbols.
      code = 0;
      if (is_simon()) {
        for (int i = 0; i < node.layer; ++i) code |= ((node.code >> i) & 1) << (2 * i);
      } else {
        code = node.code;  // RFS paths are already 2-bit packed
      }
    }
    code |= static_cast<std::uint64_t>(action) << (2 * layer);
    if (layer >= last_layer) return Node{NodeKind::Root, 0, kRootPad};
    return Node{NodeKind::Pad, layer + 1, code};
  }

  StepResult rfs_m1_step(const Node& node, int action) const {
    int q_act = 1 << n_;
    int ql_act = q_act + 1;
    int blocks = (node.kind == NodeKind::Root) ? 0 : node.layer;
    std::uint64_t packed = (node.kind == NodeKind::Root) ? 0 : node.code;
    auto block_at = [&](int i) {
      return BitString((packed >> (i * n_)) & ((std::uint64_t{1} << n_) - 1), n_);
    };
    if (action < q_act) {
      if (blocks >= l_) return StepResult{Node{NodeKind::Root, 0, kRootBot}, 0};
      std::uint64_t np = packed | (static_cast<std::uint64_t>(action) << (blocks * n_));
      return StepResult{Node{NodeKind::Path, blocks + 1, np}, 0};
    }
    if (blocks == 0) return StepResult{Node{NodeKind::Root, 0, kRootBot}, 0};
    RfsQuery q;
    if (action == ql_act) {
      if (blocks != l_) return StepResult{Node{NodeKind::Root, 0, kRootBot}, 0};
      for (int i = 0; i < blocks; ++i) q.path.push_back(block_at(i));
      q.leaf_flag = true;
      Tri ans = rfs_query(*rfs_, q);
      return StepResult{tri_root(ans), 0};
    }
    // q: last block is the guess.
    for (int i = 0; i < blocks - 1; ++i) q.path.push_back(block_at(i));
    q.guess = block_at(blocks - 1);
    Tri ans = rfs_query(*rfs_, q);
    int reward = (blocks == 1 && ans != Tri::Bot) ? 1 : 0;
    return StepResult{tri_root(ans), reward};
  }

  StepResult rfs_m2_step(const Node& node, int action) const {
    int count = (node.kind == NodeKind::Root) ? 0 : node.layer;
    std::uint64_t syms = (node.kind == NodeKind::Root) ? 0 : node.code;
    std::uint64_t nsyms = syms | (static_cast<std::uint64_t>(action) << (2 * count));
    int ncount = count + 1;
    int reward = 0;
    if (ncount == n_ + 1) reward = reward_bit(nsyms);
    if (ncount < eta_) return StepResult{Node{NodeKind::Path, ncount, nsyms}, reward};
    Tri ans = resolve_rfs_symbols(nsyms, eta_);
    return StepResult{tri_root(ans), reward};
  }

  Node tri_root(Tri ans) const {
    if (ans == Tri::Bot) return Node{NodeKind::Root, 0, kRootBot};
    return root_out(ans == Tri::One ? 1 : 0);
  }

  /// Resolve a full strict-episode symbol string (2 bits per symbol) to the
  /// oracle answer. Symbols: 0,1 bits; 2 = q; anything else invalidates.
  Tri resolve_rfs_symbols(std::uint64_t syms, int count) const {
    auto sym = [&](int i) { return (syms >> (2 * (i - 1))) & 3; };  // 1-based
    int first_q = 0;
    for (int i = 1; i <= count; ++i) {
      std::uint64_t v = sym(i);
      if (v == 2) {
        first_q = i;
        break;
      }
      if (v > 1) return Tri::Bot;  // invalid symbol in the leading region
    }
    if (first_q == 0) return Tri::Bot;  // never terminated
    int m = first_q - 1;
    if (m == 0 || m % n_ != 0) return Tri::Bot;
    int b = m / n_;
    auto block_at = [&](int idx) {  // 0-based block over the leading bits
      std::uint64_t w = 0;
      for (int i = 0; i < n_; ++i) w |= sym(idx * n_ + i + 1) << i;
      return BitString(w, n_);
    };
    RfsQuery q;
    if (b < l_) {
      for (int i = 0; i < b - 1; ++i) q.path.push_back(block_at(i));
      q.guess = block_at(b - 1);
      return rfs_query(*rfs_, q);
    }
    // b == l: the symbol after q disambiguates leaf vs parent-of-leaf.
    std::uint64_t d = sym(first_q + 1);
    if (d == 1) {
      for (int i = 0; i < l_; ++i) q.path.push_back(block_at(i));
      q.leaf_flag = true;
      return rfs_query(*rfs_, q);
    }
    if (d == 0) {
      for (int i = 0; i < l_ - 1; ++i) q.path.push_back(block_at(i));
      q.guess = block_at(l_ - 1);
      return rfs_query(*rfs_, q);
    }
    return Tri::Bot;
  }

  std::string raw_label(const Node& node) const {
    switch (node.kind) {
      case NodeKind::Root:
        if (node.code == kRootInit) return "0:init";
        if (node.code == kRootPad) return "0:pad";
        if (node.code == kRootBot) return "0:bot";
        if (is_simon())
          return "0:out:" + BitString(node.code - kRootOutBase, n_).str();
        return std::string("0:out:") + ((node.code - kRootOutBase) ? "1" : "0");
      case NodeKind::Pad: {
        std::string syms;
        for (int i = 0; i < node.layer; ++i) {
          std::uint64_t v = (node.code >> (2 * i)) & 3;
          if (is_simon())
            syms += v == 2 ? 'r' : (v == 1 ? '1' : '0');
          else
            syms += v == 3 ? 'r' : (v == 2 ? 'q' : (v == 1 ? '1' : '0'));
        }
        return std::to_string(node.layer) + ":" + syms;
      }
      case NodeKind::Path: {
        std::string syms;
        if (is_simon()) {
          for (int i = 0; i < node.layer; ++i) syms += ((node.code >> i) & 1) ? '1' : '0';
        } else {
          for (int i = 0; i < node.layer; ++i) {
            std::uint64_t v = (node.code >> (2 * i)) & 3;
            syms += v == 2 ? 'q' : (v == 1 ? '1' : '0');
          }
        }
        return std::to_string(node.layer) + ":" + syms;
      }
    }
    throw std::logic_error("raw_label");
  }

  void build_label_permutation() {
    // Bijectively scramble the reachable label set (desk scale only).
    if (variant_ == EnvVariant::RfsM1 && l_ * n_ > 16)
      throw std::invalid_argument("label permutation: too large");
    ExplicitMdp mdp = explicit_mdp_raw();
    std::vector<std::string> labels = mdp.labels;
    std::vector<std::string> shuffled = labels;
    Rng rng(opts_.label_permutation_seed);
    rng.shuffle(shuffled);
    auto map = std::make_shared<std::map<std::string, std::string>>();
    for (std::size_t i = 0; i < labels.size(); ++i) (*map)[labels[i]] = shuffled[i];
    label_map_ = std::move(map);
  }

  ExplicitMdp explicit_mdp_raw() {
    auto saved = label_map_;
    label_map_.reset();
    ExplicitMdp mdp = explicit_mdp();
    label_map_ = saved;
    return mdp;
  }

  EnvVariant variant_ = EnvVariant::SimonM1;
  std::optional<SimonInstance> simon_;
  std::optional<RfsInstance> rfs_;
  int n_ = 0;
  int l_ = 0;
  int eta_ = 0;
  std::uint64_t instance_seed_ = 0;
  EnvOptions opts_;
  std::shared_ptr<const std::map<std::string, std::string>> label_map_;
};

/// build_env per the spec surface.
inline EnvSpec build_env(const SimonInstance& inst, EnvVariant variant,
                         std::uint64_t seed = 0, EnvOptions opts = {}) {
  return EnvSpec::build(inst, variant, seed, opts);
}
inline EnvSpec build_env(const RfsInstance& inst, EnvVariant variant,
                         std::uint64_t seed = 0, EnvOptions opts = {}) {
  return EnvSpec::build(inst, variant, seed, opts);
}

inline StepResult env_step(const EnvSpec& spec, EnvState& st, int action, Rng& rng) {
  return spec.step(st, action, rng);
}

// ---------------------------------------------------------------------------
// Analyzers

/// Worst recurrently-reached state's minimum expected steps to the next
/// reward, under the canonical optimal policy. Explicit search on the
/// deterministic variants; value iteration plus reachability with rg.
inline double rewarding_diameter(const EnvSpec& spec, double gamma = 0.9) {
  ExplicitMdp mdp = spec.explicit_mdp();
  if (mdp.num_states() > 2000000) throw std::runtime_error("rewarding_diameter: too large");
  auto vi = value_iteration(mdp, gamma, 1e-12);
  auto recurrent = recurrent_states(mdp, vi.policy);
  auto steps = expected_steps_to_reward(mdp);
  double d = 0.0;
  for (int s : recurrent) d = std::max(d, steps[static_cast<std::size_t>(s)]);
  return d;
}

struct GenuinenessReport {
  double diameter = 0.0;
  bool a = false, b = false, c = false;
  std::string evidence_a, evidence_b, evidence_c;
  double open_loop_gap = 0.0;
};

/// Criteria from the interactivity analysis:
///  a) rewarding diameter strictly increasing across the supplied sizes;
///  b) on the optimal recurrent states, actions pick between distinct
///     successors AND some action's successor depends on the current state
///     (rules out rank-one transition structure);
///  c) the best open-loop action sequence is strictly beaten by the
///     closed-loop optimum (deterministic environments fail automatically).
inline GenuinenessReport genuineness_report(const EnvSpec& spec,
                                            const std::vector<std::pair<int, double>>& diameters,
                                            double gamma = 0.9) {
  if (diameters.size() < 3)
    throw std::invalid_argument("genuineness_report: need diameters for >= 3 sizes");
  GenuinenessReport rep;
  rep.diameter = rewarding_diameter(spec, gamma);

  rep.a = true;
  {
    auto sorted = diameters;
    std::sort(sorted.begin(), sorted.end());
    std::ostringstream ev;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (i) {
        ev << " ";
        if (sorted[i].second <= sorted[i - 1].second + 1e-9) rep.a = false;
      }
      ev << "d(" << sorted[i].first << ")=" << sorted[i].second;
    }
    rep.evidence_a = ev.str();
  }

  ExplicitMdp mdp = spec.explicit_mdp();
  auto vi = value_iteration(mdp, gamma, 1e-12);
  auto recurrent = recurrent_states(mdp, vi.policy);

  auto dist_of = [&](int s, int a) {
    std::vector<std::pair<int, double>> d;
    for (const auto& arc : mdp.trans[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)])
      d.emplace_back(arc.next, arc.prob);
    std::sort(d.begin(), d.end());
    return d;
  };

  bool per_state = !recurrent.empty();
  std::string witness_state;
  for (int s : recurrent) {
    bool found = false;
    for (int a1 = 0; a1 < mdp.num_actions && !found; ++a1)
      for (int a2 = a1 + 1; a2 < mdp.num_actions && !found; ++a2)
        if (dist_of(s, a1) != dist_of(s, a2)) found = true;
    if (!found) {
      per_state = false;
      witness_state = mdp.labels[static_cast<std::size_t>(s)];
      break;
    }
  }
  bool state_matters = false;
  std::string witness_pair;
  for (int a = 0; a < mdp.num_actions && !state_matters; ++a)
    for (std::size_t i = 0; i < recurrent.size() && !state_matters; ++i)
      for (std::size_t j = i + 1; j < recurrent.size(); ++j)
        if (dist_of(recurrent[i], a) != dist_of(recurrent[j], a)) {
          state_matters = true;
          witness_pair = mdp.labels[static_cast<std::size_t>(recurrent[i])] + " vs " +
                         mdp.labels[static_cast<std::size_t>(recurrent[j])] + " under action " +
                         spec.action_name(a);
          break;
        }
  rep.b = per_state && state_matters;
  rep.evidence_b = rep.b ? ("state-dependent: " + witness_pair)
                         : (per_state ? "no action whose effect depends on the state"
                                      : "no diverging action pair at " + witness_state);

  if (!spec.has_rg()) {
    rep.c = false;
    rep.open_loop_gap = 0.0;
    rep.evidence_c = "deterministic environment: open-loop replay is optimal";
  } else {
    // Three full episode lengths; at 2*eta the closed-loop advantage is still
    // masked by rewards in flight at the horizon edge.
    int horizon = 3 * (spec.eta() > 0 ? spec.eta() : spec.n());
    auto quot = bisimulation_quotient(mdp);
    double closed = closed_loop_optimum(quot.mdp, horizon);
    double open = open_loop_optimum(quot.mdp, horizon);
    rep.open_loop_gap = closed - open;
    rep.c = rep.open_loop_gap > 1e-9;
    std::ostringstream ev;
    ev << "horizon " << horizon << ": closed " << closed << " vs open " << open;
    rep.evidence_c = ev.str();
  }
  return rep;
}

}  // namespace qrlab
