#pragma once

// Digests: finite abstractions of a thread's computational history with
// transfer functions mirroring the concrete semantics and a per-global
// may-happen-in-parallel predicate.

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <typeinfo>
#include <vector>

#include "digestrace/program.hpp"
#include "digestrace/trace.hpp"

namespace digestrace {

/// Two-point answer lattice: False means "provably not in parallel".
enum class Verdict : std::uint8_t { False, Top };

inline Verdict meet(Verdict a, Verdict b) { return a == Verdict::False ? a : b; }
inline const char* to_string(Verdict v) { return v == Verdict::False ? "false" : "top"; }

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArityMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Immutable, type-erased digest element: comparable, hashable, printable.
class AnyElement {
  struct Concept {
    virtual ~Concept() = default;
    virtual bool equals(const Concept&) const = 0;
    virtual bool less(const Concept&) const = 0;
    virtual const std::type_info& type() const = 0;
    std::string text;
    std::size_t hash = 0;
  };
  template <class T>
  struct Model final : Concept {
    T value;
    explicit Model(T v) : value(std::move(v)) {}
    bool equals(const Concept& o) const override { return value == static_cast<const Model&>(o).value; }
    bool less(const Concept& o) const override { return value < static_cast<const Model&>(o).value; }
    const std::type_info& type() const override { return typeid(T); }
  };

  std::shared_ptr<const Concept> p_;

 public:
  AnyElement() = default;

  /// `str` must be injective on T; it is the element's printed form and hash key.
  template <class T>
  static AnyElement make(T value, std::string str) {
    auto m = std::make_shared<Model<T>>(std::move(value));
    m->hash = std::hash<std::string>{}(str);
    m->text = std::move(str);
    AnyElement e;
    e.p_ = std::move(m);
    return e;
  }

  bool empty() const { return !p_; }

  template <class T>
  const T& as() const {
    if (!p_ || p_->type() != typeid(T)) throw std::bad_cast();
    return static_cast<const Model<T>&>(*p_).value;
  }

  const std::string& str() const {
    static const std::string none = "<none>";
    return p_ ? p_->text : none;
  }
  std::size_t hash() const { return p_ ? p_->hash : 0; }

  friend bool operator==(const AnyElement& a, const AnyElement& b) {
    if (a.p_ == b.p_) return true;
    if (!a.p_ || !b.p_) return false;
    if (a.p_->hash != b.p_->hash || a.p_->type() != b.p_->type()) return false;
    return a.p_->equals(*b.p_);
  }
  friend bool operator<(const AnyElement& a, const AnyElement& b) {
    if (!a.p_ || !b.p_) return !a.p_ && b.p_;
    if (a.p_->type() != b.p_->type()) return a.p_->type().before(b.p_->type());
    return a.p_->less(*b.p_);
  }
};

struct AnyElementHash {
  std::size_t operator()(const AnyElement& e) const { return e.hash(); }
};

/// Runtime digest interface. Transfer functions return nullopt for the empty
/// set of digests, so determinism holds by construction.
class AnyDigest {
 public:
  virtual ~AnyDigest() = default;
  virtual std::string name() const = 0;
  virtual std::vector<AnyElement> init_digests() const = 0;
  /// Digest of a thread created by the ego (digest `a`) along `create`.
  virtual std::optional<AnyElement> new_digest(const AnyElement& a, const Action& create) const = 0;
  virtual std::optional<AnyElement> step_local(const Action& act, const AnyElement& a) const = 0;
  virtual std::optional<AnyElement> step_observing(const Action& act, const AnyElement& a0,
                                                   const AnyElement& a1) const = 0;
  virtual Verdict mhp(const std::string& global, const AnyElement& a, const AnyElement& b) const = 0;
  virtual AnyElement abstract_trace(const Program& p, const LocalTrace& t) const = 0;
};

using DigestPtr = std::shared_ptr<const AnyDigest>;

/// CRTP adapter: a digest written against a concrete element type `E`
/// (needs ==, < and a `describe(const E&)` member) gets the erased interface.
///
///   struct Mine : Digest<Mine, int> {
///     std::string name() const;
///     std::vector<int> init() const;
///     std::optional<int> fresh(const int& parent, const Action& create) const;
///     std::optional<int> local(const Action&, const int&) const;
///     std::optional<int> observe(const Action&, const int&, const int&) const;
///     Verdict may_parallel(const std::string& g, const int&, const int&) const;
///     int alpha(const Program&, const LocalTrace&) const;
///     std::string describe(const int&) const;
///   };
template <class Derived, class E>
class Digest : public AnyDigest {
 public:
  using Element = E;

  AnyElement wrap(E e) const {
    auto s = self().describe(e);
    return AnyElement::make<E>(std::move(e), std::move(s));
  }
  static const E& unwrap(const AnyElement& a) { return a.as<E>(); }

  std::vector<AnyElement> init_digests() const override {
    std::vector<AnyElement> out;
    for (auto& e : self().init()) out.push_back(wrap(std::move(e)));
    return out;
  }
  std::optional<AnyElement> new_digest(const AnyElement& a, const Action& create) const override {
    return lift(self().fresh(unwrap(a), create));
  }
  std::optional<AnyElement> step_local(const Action& act, const AnyElement& a) const override {
    return lift(self().local(act, unwrap(a)));
  }
  std::optional<AnyElement> step_observing(const Action& act, const AnyElement& a0,
                                           const AnyElement& a1) const override {
    return lift(self().observe(act, unwrap(a0), unwrap(a1)));
  }
  Verdict mhp(const std::string& g, const AnyElement& a, const AnyElement& b) const override {
    return self().may_parallel(g, unwrap(a), unwrap(b));
  }
  AnyElement abstract_trace(const Program& p, const LocalTrace& t) const override {
    return wrap(self().alpha(p, t));
  }

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
  std::optional<AnyElement> lift(std::optional<E> e) const {
    if (!e) return std::nullopt;
    return wrap(std::move(*e));
  }
};

/// Derived from the digest's own lock transfer: false iff locking the
/// atomicity mutex of `g` is impossible in one of the two directions.
inline Verdict generic_mhp(const AnyDigest& d, const std::string& g, const AnyElement& a, const AnyElement& b) {
  auto lock = Action::lock(Program::atomicity_mutex(g));
  if (!d.step_observing(lock, a, b) || !d.step_observing(lock, b, a)) return Verdict::False;
  return Verdict::Top;
}

enum class PredicateMode : std::uint8_t { Bespoke, Generic, Disabled };

inline const char* to_string(PredicateMode m) {
  switch (m) {
    case PredicateMode::Bespoke: return "bespoke";
    case PredicateMode::Generic: return "generic";
    case PredicateMode::Disabled: return "disabled";
  }
  return "?";
}

inline PredicateMode parse_predicate_mode(std::string_view s) {
  if (s == "bespoke") return PredicateMode::Bespoke;
  if (s == "generic") return PredicateMode::Generic;
  if (s == "disabled") return PredicateMode::Disabled;
  throw ConfigError("unknown predicate mode '" + std::string(s) + "'");
}

using ProductTuple = std::vector<AnyElement>;

/// Pointwise product of digests. Its elements are tuples, one coordinate per
/// component; a step is defined only if every coordinate's step is.
class ProductDigest final : public AnyDigest {
 public:
  explicit ProductDigest(std::vector<DigestPtr> components) : components_(std::move(components)) {
    if (components_.empty()) throw ConfigError("a product needs at least one digest");
  }

  const std::vector<DigestPtr>& components() const { return components_; }
  std::size_t arity() const { return components_.size(); }

  std::string name() const override {
    std::string s;
    for (const auto& c : components_) s += (s.empty() ? "" : "+") + c->name();
    return s;
  }

  AnyElement make(ProductTuple t) const {
    std::string s = "(";
    for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ", " : "") + t[i].str();
    s += ")";
    return AnyElement::make<ProductTuple>(std::move(t), std::move(s));
  }
  const ProductTuple& tuple(const AnyElement& e) const {
    const auto& t = e.as<ProductTuple>();
    if (t.size() != components_.size()) throw ArityMismatch("digest tuple arity does not match the product");
    return t;
  }

  std::vector<AnyElement> init_digests() const override {
    std::vector<ProductTuple> acc{{}};
    for (const auto& c : components_) {
      std::vector<ProductTuple> next;
      for (const auto& prefix : acc)
        for (const auto& e : c->init_digests()) {
          auto t = prefix;
          t.push_back(e);
          next.push_back(std::move(t));
        }
      acc = std::move(next);
    }
    std::vector<AnyElement> out;
    for (auto& t : acc) out.push_back(make(std::move(t)));
    return out;
  }

  std::optional<AnyElement> new_digest(const AnyElement& a, const Action& create) const override {
    return pointwise([&](std::size_t i, const AnyElement& x) { return components_[i]->new_digest(x, create); }, a);
  }
  std::optional<AnyElement> step_local(const Action& act, const AnyElement& a) const override {
    return pointwise([&](std::size_t i, const AnyElement& x) { return components_[i]->step_local(act, x); }, a);
  }
  std::optional<AnyElement> step_observing(const Action& act, const AnyElement& a0,
                                           const AnyElement& a1) const override {
    const auto& t1 = tuple(a1);
    return pointwise(
        [&](std::size_t i, const AnyElement& x) { return components_[i]->step_observing(act, x, t1[i]); }, a0);
  }

  /// Meet of the bespoke component predicates.
  Verdict mhp(const std::string& g, const AnyElement& a, const AnyElement& b) const override {
    return mhp(g, a, b, std::vector<PredicateMode>(arity(), PredicateMode::Bespoke));
  }

  Verdict mhp(const std::string& g, const AnyElement& a, const AnyElement& b,
              const std::vector<PredicateMode>& modes) const {
    auto v = component_verdicts(g, a, b, modes);
    Verdict r = Verdict::Top;
    for (auto x : v) r = meet(r, x);
    return r;
  }

  std::vector<Verdict> component_verdicts(const std::string& g, const AnyElement& a, const AnyElement& b,
                                          const std::vector<PredicateMode>& modes) const {
    if (modes.size() != arity()) throw ArityMismatch("one predicate mode per component expected");
    const auto& ta = tuple(a);
    const auto& tb = tuple(b);
    std::vector<Verdict> out;
    for (std::size_t i = 0; i < arity(); ++i) {
      switch (modes[i]) {
        case PredicateMode::Bespoke: out.push_back(components_[i]->mhp(g, ta[i], tb[i])); break;
        case PredicateMode::Generic: out.push_back(generic_mhp(*components_[i], g, ta[i], tb[i])); break;
        case PredicateMode::Disabled: out.push_back(Verdict::Top); break;
      }
    }
    return out;
  }

  AnyElement abstract_trace(const Program& p, const LocalTrace& t) const override {
    ProductTuple out;
    for (const auto& c : components_) out.push_back(c->abstract_trace(p, t));
    return make(std::move(out));
  }

 private:
  std::vector<DigestPtr> components_;

  template <class F>
  std::optional<AnyElement> pointwise(F f, const AnyElement& a) const {
    const auto& t = tuple(a);
    ProductTuple out;
    out.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto r = f(i, t[i]);
      if (!r) return std::nullopt;
      out.push_back(std::move(*r));
    }
    return make(std::move(out));
  }
};

/// Component-wise meet on two tuples of the product, bespoke predicates.
inline Verdict product_mhp(const ProductDigest& p, const std::string& g, const AnyElement& a, const AnyElement& b) {
  return p.mhp(g, a, b);
}

namespace detail {

/// The local trace of configuration `c` inside `t` (its causal past).
inline LocalTrace sub_trace(const Program& p, const LocalTrace& t, const ConfigRef& c) {
  return past_trace(p, t.lanes, c);
}

}  // namespace detail

}  // namespace digestrace
