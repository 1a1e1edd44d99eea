#pragma once

// Statevector substrate and the unitary side of the environments: the
// self-reversible realization of the deterministic sub-environment, the
// oraculization protocol with its 5*eta step schedule, and reference
// bit-flip oracles for equivalence testing.
//
// Every environment step is a classical basis permutation (a controlled
// XOR into a fresh percept register), so the oraculization protocol is
// applied exactly, per input basis component; the full-layout statevector
// route is available at small sizes and agrees with it (tested).

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrlab/bitstring.hpp"
#include "qrlab/envs.hpp"
#include "qrlab/oracles.hpp"
#include "qrlab/rng.hpp"

namespace qrlab {

struct Register {
  std::string name;
  int bits = 0;
  int offset = 0;
};

class RegisterLayout {
 public:
  explicit RegisterLayout(int cap_bits = 24) : cap_(cap_bits) {}

  RegisterLayout& add(const std::string& name, int bits) {
    if (bits < 1) throw std::invalid_argument("RegisterLayout: empty register");
    for (const auto& r : regs_)
      if (r.name == name) throw std::invalid_argument("RegisterLayout: duplicate name " + name);
    if (total_ + bits > cap_)
      throw std::invalid_argument("RegisterLayout: register cap exceeded (" +
                                  std::to_string(total_ + bits) + " > " + std::to_string(cap_) + ")");
    regs_.push_back(Register{name, bits, total_});
    total_ += bits;
    return *this;
  }

  const Register& reg(const std::string& name) const {
    for (const auto& r : regs_)
      if (r.name == name) return r;
    throw std::invalid_argument("RegisterLayout: no register " + name);
  }

  const std::vector<Register>& registers() const { return regs_; }
  int total_bits() const { return total_; }
  int cap() const { return cap_; }

  std::uint64_t extract(std::uint64_t index, const Register& r) const {
    return (index >> r.offset) & mask(r.bits);
  }
  std::uint64_t insert(std::uint64_t index, const Register& r, std::uint64_t value) const {
    return (index & ~(mask(r.bits) << r.offset)) | ((value & mask(r.bits)) << r.offset);
  }

  static std::uint64_t mask(int bits) {
    return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
  }

 private:
  std::vector<Register> regs_;
  int total_ = 0;
  int cap_ = 24;
};

using Amplitude = std::complex<double>;
using BasisMap = std::function<std::uint64_t(std::uint64_t)>;

class QState {
 public:
  explicit QState(RegisterLayout layout, std::uint64_t basis_index = 0)
      : layout_(std::move(layout)),
        amps_(std::size_t{1} << layout_.total_bits(), Amplitude{0, 0}) {
    amps_[basis_index] = Amplitude{1, 0};
  }

  const RegisterLayout& layout() const { return layout_; }
  std::size_t dim() const { return amps_.size(); }
  Amplitude amplitude(std::uint64_t index) const { return amps_[index]; }
  std::vector<Amplitude>& amplitudes() { return amps_; }
  const std::vector<Amplitude>& amplitudes() const { return amps_; }

  double norm() const {
    double n = 0;
    for (const auto& a : amps_) n += std::norm(a);
    return std::sqrt(n);
  }

  void reset_basis(std::uint64_t basis_index) {
    std::fill(amps_.begin(), amps_.end(), Amplitude{0, 0});
    amps_[basis_index] = Amplitude{1, 0};
  }

  /// Tensor of single-bit Hadamards over one register. Registers anchored at
  /// bit 0 take a blocked in-place Walsh-Hadamard sweep.
  void hadamard(const std::string& reg_name) {
    const Register& r = layout_.reg(reg_name);
    const double scale = std::pow(0.5, 0.5 * r.bits);
    if (r.offset == 0) {
      std::size_t block = std::size_t{1} << r.bits;
      for (std::size_t base = 0; base < amps_.size(); base += block) {
        for (std::size_t h = 1; h < block; h <<= 1)
          for (std::size_t i = 0; i < block; i += h << 1)
            for (std::size_t j = i; j < i + h; ++j) {
              Amplitude u = amps_[base + j];
              Amplitude v = amps_[base + j + h];
              amps_[base + j] = u + v;
              amps_[base + j + h] = u - v;
            }
      }
    } else {
      for (int b = 0; b < r.bits; ++b) {
        std::size_t h = std::size_t{1} << (r.offset + b);
        for (std::size_t i = 0; i < amps_.size(); i += h << 1)
          for (std::size_t j = i; j < i + h; ++j) {
            Amplitude u = amps_[j];
            Amplitude v = amps_[j + h];
            amps_[j] = u + v;
            amps_[j + h] = u - v;
          }
      }
    }
    for (auto& a : amps_) a *= scale;
  }

  /// Classical reversible map on basis indices (must be a bijection).
  void apply(const BasisMap& f) {
    std::vector<Amplitude> out(amps_.size(), Amplitude{0, 0});
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      if (amps_[i] == Amplitude{0, 0}) continue;
      out[f(i)] += amps_[i];
    }
    amps_.swap(out);
  }

  /// Born-rule measurement of one register; collapses and renormalizes.
  std::uint64_t measure(const std::string& reg_name, Rng& rng) {
    const Register& r = layout_.reg(reg_name);
    std::vector<double> probs(std::size_t{1} << r.bits, 0.0);
    for (std::size_t i = 0; i < amps_.size(); ++i)
      probs[layout_.extract(i, r)] += std::norm(amps_[i]);
    double draw = rng.unit();
    std::uint64_t outcome = probs.size() - 1;
    double acc = 0;
    for (std::size_t v = 0; v < probs.size(); ++v) {
      acc += probs[v];
      if (draw < acc) {
        outcome = v;
        break;
      }
    }
    double p = probs[outcome];
    if (p <= 0) throw std::logic_error("measure: zero-norm conditional");
    double inv = 1.0 / std::sqrt(p);
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      if (layout_.extract(i, r) == outcome)
        amps_[i] *= inv;
      else
        amps_[i] = Amplitude{0, 0};
    }
    return outcome;
  }

  /// Marginal outcome distribution of a register (diagnostics and tests).
  std::vector<double> marginal(const std::string& reg_name) const {
    const Register& r = layout_.reg(reg_name);
    std::vector<double> probs(std::size_t{1} << r.bits, 0.0);
    for (std::size_t i = 0; i < amps_.size(); ++i)
      probs[layout_.extract(i, r)] += std::norm(amps_[i]);
    return probs;
  }

  nlohmann::ordered_json dump(double threshold = 1e-12) const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < amps_.size(); ++i)
      if (std::abs(amps_[i]) > threshold)
        arr.push_back({hex_of(i, layout_.total_bits()), amps_[i].real(), amps_[i].imag()});
    return arr;
  }

 private:
  RegisterLayout layout_;
  std::vector<Amplitude> amps_;
};

inline void qstate_apply(QState& st, const std::string& hadamard_register) {
  st.hadamard(hadamard_register);
}
inline void qstate_apply(QState& st, const BasisMap& f) { st.apply(f); }
inline std::uint64_t qstate_measure(QState& st, const std::string& reg, Rng& rng) {
  return st.measure(reg, rng);
}

/// True when the state factorizes across (low_bits | rest): every pair of
/// rows of the reshaped amplitude matrix is proportional.
inline bool product_across(const QState& st, int low_bits, double tol = 1e-9) {
  std::size_t cols = std::size_t{1} << low_bits;
  std::size_t rows = st.dim() >> low_bits;
  std::size_t ref = 0;
  double best = 0;
  for (std::size_t i = 0; i < st.dim(); ++i)
    if (std::abs(st.amplitude(i)) > best) {
      best = std::abs(st.amplitude(i));
      ref = i;
    }
  std::size_t ref_row = ref >> low_bits;
  for (std::size_t r = 0; r < rows; ++r) {
    if (r == ref_row) continue;
    // 2x2 minors against the reference row must vanish.
    for (std::size_t c1 = 0; c1 < cols; ++c1)
      for (std::size_t c2 = c1 + 1; c2 < cols; ++c2) {
        Amplitude det = st.amplitude((r << low_bits) | c1) * st.amplitude((ref_row << low_bits) | c2) -
                        st.amplitude((r << low_bits) | c2) * st.amplitude((ref_row << low_bits) | c1);
        if (std::abs(det) > tol) return false;
      }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Environment unitary realization and oraculization

enum class OraculizeMode { Full, Simplified };

/// Interaction steps charged per simulated oracle call, as multiples of eta.
/// Full mode: input, scavenge, hijack, uncompute by rerun, final scavenge.
/// Simplified mode: input and scavenge only; hijacking is charged zero steps
/// in the fully observable case.
struct OraculizeCost {
  int full_multiplier = 5;
  int simplified_multiplier = 2;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline int rfs_len_field_bits(int l) {
  int bits = 0;
  while ((1 << bits) < l) ++bits;
  return bits == 0 ? 1 : bits;  // keep an explicit length field even at l=1
}

/// Decode the canonical RFS query code (length field, packed blocks, leaf
/// flag) into (blocks used, packed block bits, leaf flag). Length values
/// beyond l clamp; the flag is meaningful only at full depth; unused block
/// bits are ignored. Codes differing only in ignored bits alias.
inline std::tuple<int, std::uint64_t, int> decode_rfs_code(int n, int l, std::uint64_t query) {
  int lb = rfs_len_field_bits(l);
  int blocks_used = static_cast<int>(query & ((std::uint64_t{1} << lb) - 1)) + 1;
  if (blocks_used > l) blocks_used = l;
  std::uint64_t blocks = (query >> lb) & ((l * n >= 64) ? ~std::uint64_t{0}
                                                        : (std::uint64_t{1} << (l * n)) - 1);
  std::uint64_t used_mask = (std::uint64_t{1} << (blocks_used * n)) - 1;
  int leaf = static_cast<int>((query >> (lb + l * n)) & 1);
  if (blocks_used < l) leaf = 0;
  return {blocks_used, blocks & used_mask, leaf};
}

/// Build the canonical RFS query code from a structured query.
inline std::uint64_t encode_rfs_code(int n, int l, const RfsQuery& q) {
  int lb = rfs_len_field_bits(l);
  int blocks_used = static_cast<int>(q.path.size()) + (q.leaf_flag ? 0 : 1);
  if (q.leaf_flag) blocks_used = l;
  std::uint64_t code = static_cast<std::uint64_t>(blocks_used - 1);
  std::uint64_t blocks = 0;
  int i = 0;
  for (const auto& x : q.path) blocks |= x.word() << (n * i++);
  if (!q.leaf_flag && q.guess) blocks |= q.guess->word() << (n * i);
  code |= blocks << lb;
  if (q.leaf_flag) code |= std::uint64_t{1} << (lb + l * n);
  return code;
}

/// The deterministic sub-environment as an ordered list of self-inverse
/// controlled XOR steps U_k (each writes percept k from the first k action
/// symbols) plus the reward step; all steps are basis permutations.
class EnvUnitaryRealization {
 public:
  explicit EnvUnitaryRealization(EnvSpec spec) : spec_(std::move(spec)) {
    eta_ = spec_.eta();
    if (eta_ < 1)
      throw std::invalid_argument("realize_env_unitary: environment is not strictly episodic");
    ab_ = spec_.action_bits();  // throws when there is no deterministic unitary core
  }

  const EnvSpec& spec() const { return spec_; }
  int eta() const { return eta_; }
  int action_bits() const { return ab_; }
  int output_bits() const { return spec_.percept_bits(eta_); }
  int reward_position() const { return spec_.reward_step_position(); }

  std::uint64_t label_code(std::uint64_t packed_actions, int k) const {
    return spec_.label_code_after(packed_actions, k);
  }
  int reward_bit(std::uint64_t packed_actions) const { return spec_.reward_bit(packed_actions); }

  /// Agent-visible oracle layout: query register x, preserved output y,
  /// reward bit b.
  RegisterLayout agent_layout(int cap = 24) const {
    RegisterLayout lay(cap);
    lay.add("x", query_bits());
    lay.add("y", output_bits());
    lay.add("b", 1);
    return lay;
  }

  /// Query register width: the packed action string for Simon, the canonical
  /// (length, blocks, leaf-flag) code for RFS.
  int query_bits() const {
    if (spec_.is_simon()) return eta_ * ab_;
    return rfs_len_field_bits(spec_.l()) + spec_.l() * spec_.n() + 1;
  }

  /// Encode an agent query into the packed action-symbol string the
  /// environment consumes. Distinct codes may alias to one action string
  /// (ignored blocks, leaf flag on short queries), matching the reference
  /// oracle's semantics.
  std::uint64_t encode_actions(std::uint64_t query) const {
    if (spec_.is_simon()) return query;
    auto [blocks_used, blocks, leaf] = decode_rfs_code(spec_.n(), spec_.l(), query);
    std::uint64_t syms = 0;
    int pos = 0;  // symbol position, 0-based
    for (int i = 0; i < blocks_used * spec_.n(); ++i, ++pos)
      syms |= ((blocks >> i) & 1) << (2 * pos);
    syms |= std::uint64_t{2} << (2 * pos);  // q terminator
    ++pos;
    if (blocks_used == spec_.l())
      syms |= static_cast<std::uint64_t>(leaf) << (2 * pos);  // disambiguation bit
    return syms;  // remaining symbols are 0-bit padding
  }

  /// Full-layout register set: actions, one percept per step, reward.
  RegisterLayout full_layout(int cap = 24) const {
    RegisterLayout lay(cap);
    lay.add("a", eta_ * ab_);
    for (int k = 1; k <= eta_; ++k) lay.add("p" + std::to_string(k), spec_.percept_bits(k));
    lay.add("r", 1);
    return lay;
  }

  /// U_k over the full layout: percept k ^= label(first k action symbols).
  BasisMap step_map(const RegisterLayout& lay, int k) const {
    const Register a = lay.reg("a");
    const Register p = lay.reg("p" + std::to_string(k));
    return [this, a, p, k, lay](std::uint64_t idx) {
      std::uint64_t packed = lay.extract(idx, a);
      return idx ^ (label_code(packed, k) << p.offset);
    };
  }

  /// Reward step over the full layout.
  BasisMap reward_map(const RegisterLayout& lay) const {
    const Register a = lay.reg("a");
    const Register r = lay.reg("r");
    return [this, a, r, lay](std::uint64_t idx) {
      std::uint64_t packed = lay.extract(idx, a);
      return idx ^ (static_cast<std::uint64_t>(reward_bit(packed)) << r.offset);
    };
  }

  /// The full five-phase protocol on a full-layout state (small sizes):
  /// input+compute, scavenge, hijack, uncompute by rerun, final scavenge.
  void protocol_full_layout(QState& st) const {
    RegisterLayout lay = full_layout();
    for (int k = 1; k <= eta_; ++k) {
      st.apply(step_map(lay, k));
      if (k == reward_position()) st.apply(reward_map(lay));
    }
    // Scavenging and hijacking transfer ownership only. The rerun skips the
    // hijacked targets: the final percept and the reward register.
    for (int k = 1; k < eta_; ++k) st.apply(step_map(lay, k));
  }

  // --- per-basis-component protocol ---------------------------------------

  struct CallResult {
    std::uint64_t y = 0;
    int b = 0;
  };

  /// Trace one basis component (x, y, b) through the protocol; the percept
  /// scratch must return to zero or the protocol has failed.
  CallResult trace_component(std::uint64_t query, std::uint64_t y, int b,
                             OraculizeMode mode) const {
    if (mode == OraculizeMode::Simplified && !spec_.labels_are_prefixes())
      throw ProtocolError(
          "simplified oraculization requires state labels equal to action prefixes");
    std::uint64_t packed = encode_actions(query);
    std::vector<std::uint64_t> percept(static_cast<std::size_t>(eta_) + 1, 0);  // 1-based
    percept[static_cast<std::size_t>(eta_)] = y;  // the agent pre-loads its output register
    int reward = b;
    // Phase 1: input the action sequence; the environment writes each percept
    // and the reward.
    for (int k = 1; k <= eta_; ++k) {
      percept[static_cast<std::size_t>(k)] ^= label_code(packed, k);
      if (k == reward_position()) reward ^= reward_bit(packed);
    }
    // Phases 2-3: scavenge and hijack are ownership bookkeeping only.
    // Phase 4: uncompute. Full mode reruns U_1..U_{eta-1} (self-inverse
    // steps); simplified mode has the agent delete the same registers
    // locally, valid because the labels equal the action prefixes it holds.
    for (int k = 1; k < eta_; ++k) percept[static_cast<std::size_t>(k)] ^= label_code(packed, k);
    // Phase 5: final scavenge (actions). Scratch must be clean.
    for (int k = 1; k < eta_; ++k)
      if (percept[static_cast<std::size_t>(k)] != 0)
        throw ProtocolError("oraculization left residue in percept scratch");
    return CallResult{percept[static_cast<std::size_t>(eta_)], reward};
  }

  int steps_per_call(OraculizeMode mode) const {
    return (mode == OraculizeMode::Full ? cost_.full_multiplier : cost_.simplified_multiplier) *
           eta_;
  }

  void set_cost_model(OraculizeCost cost) { cost_ = cost; }

 private:
  EnvSpec spec_;
  int eta_ = 0;
  int ab_ = 0;
  OraculizeCost cost_;
};

inline EnvUnitaryRealization realize_env_unitary(const EnvSpec& spec) {
  return EnvUnitaryRealization(spec);
}

/// Simulated E_q call: applies the oracle the protocol realizes to a state
/// over (x, y, b), returning the new state and the interaction steps
/// consumed (5*eta full, 2*eta simplified).
inline std::pair<QState, std::uint64_t> oraculize_call(const EnvUnitaryRealization& realization,
                                                       const QState& input,
                                                       OraculizeMode mode) {
  const RegisterLayout& lay = input.layout();
  const Register& xr = lay.reg("x");
  const Register& yr = lay.reg("y");
  const Register& br = lay.reg("b");
  if (xr.bits != realization.query_bits() || yr.bits != realization.output_bits())
    throw std::invalid_argument("oraculize_call: layout mismatch");
  QState out = input;
  out.apply([&](std::uint64_t idx) {
    std::uint64_t x = lay.extract(idx, xr);
    std::uint64_t y = lay.extract(idx, yr);
    int b = static_cast<int>(lay.extract(idx, br));
    auto res = realization.trace_component(x, y, b, mode);
    std::uint64_t nidx = lay.insert(idx, yr, res.y);
    return lay.insert(nidx, br, static_cast<std::uint64_t>(res.b));
  });
  return {std::move(out), static_cast<std::uint64_t>(realization.steps_per_call(mode))};
}

// ---------------------------------------------------------------------------
// Reference oracles

/// |x>|y>|b> -> |x>|y^f(x)>|b^[x=s]> over registers x(n), y(n), b(1).
inline BasisMap oracle_reference(const SimonInstance& inst, const RegisterLayout& lay) {
  const Register xr = lay.reg("x");
  const Register yr = lay.reg("y");
  const Register br = lay.reg("b");
  return [inst, lay, xr, yr, br](std::uint64_t idx) {
    std::uint64_t x = lay.extract(idx, xr);
    std::uint64_t fx = inst.table[x];
    std::uint64_t flag = (x == inst.s.word()) ? 1u : 0u;
    std::uint64_t nidx = idx ^ (fx << yr.offset);
    return nidx ^ (flag << br.offset);
  };
}

inline std::uint64_t tri_code(Tri t) {
  return t == Tri::Bot ? 0 : (t == Tri::Zero ? 1 : 3);  // (valid, value) bits
}

/// Answer of the canonically coded RFS query.
inline Tri rfs_answer_of_code(const RfsInstance& inst, std::uint64_t code) {
  auto [blocks_used, blocks, leaf] = decode_rfs_code(inst.n, inst.l, code);
  RfsQuery q;
  auto block_at = [&](int i) {
    return BitString((blocks >> (i * inst.n)) & RegisterLayout::mask(inst.n), inst.n);
  };
  if (leaf) {
    for (int i = 0; i < inst.l; ++i) q.path.push_back(block_at(i));
    q.leaf_flag = true;
  } else {
    for (int i = 0; i < blocks_used - 1; ++i) q.path.push_back(block_at(i));
    q.guess = block_at(blocks_used - 1);
  }
  return rfs_query(inst, q);
}

/// Reference RFS oracle over the canonical query code: y(2) accumulates the
/// (valid,value)-coded answer, b flips on a certified root guess.
inline BasisMap oracle_reference(const RfsInstance& inst, const RegisterLayout& lay) {
  const Register xr = lay.reg("x");
  const Register yr = lay.reg("y");
  const Register br = lay.reg("b");
  return [inst, lay, xr, yr, br](std::uint64_t idx) {
    std::uint64_t x = lay.extract(idx, xr);
    auto [blocks_used, blocks, leaf] = decode_rfs_code(inst.n, inst.l, x);
    (void)blocks;
    Tri ans = rfs_answer_of_code(inst, x);
    std::uint64_t reward = (!leaf && blocks_used == 1 && ans != Tri::Bot) ? 1u : 0u;
    std::uint64_t nidx = idx ^ (tri_code(ans) << yr.offset);
    return nidx ^ (reward << br.offset);
  };
}

}  // namespace qrlab
