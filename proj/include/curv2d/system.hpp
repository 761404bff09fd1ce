#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "curv2d/expr.hpp"

namespace curv2d {

struct StatePoint {
    double q1 = 0.0;
    double q2 = 0.0;
};

struct ControlDomain {
    enum class Kind { interval, circle };
    Kind kind = Kind::circle;
    double min = 0.0;  // interval only
    double max = 0.0;
};

template <class T>
struct Vec2T {
    T x{}, y{};
};
using Vec2 = Vec2T<double>;

/// All partial derivatives of f = (f1,f2) at one point, up to a total
/// order <= 4 in (q1, q2, u). One slot per multi-index; symmetry of mixed
/// partials holds by construction.
class Jet {
  public:
    static constexpr int kMaxOrder = 4;

    explicit Jet(int order);

    int order() const { return order_; }
    double partial(int component, int i, int j, int k) const;
    void set_partial(int component, int i, int j, int k, double value);

    /// Restriction to a lower order (drops higher entries).
    Jet restrict_order(int lower) const;

  private:
    static int pack(int i, int j, int k);
    int order_;
    std::array<double, 70> vals_{};
};

/// Evaluates f(q,u) on plain doubles and on nested duals up to depth 4;
/// every other derivative in the library is built from these entry points.
class SystemEvaluator {
  public:
    virtual ~SystemEvaluator() = default;
    virtual Vec2T<double> eval(const double& q1, const double& q2, const double& u) const = 0;
    virtual Vec2T<DualN<1>> eval(const DualN<1>& q1, const DualN<1>& q2, const DualN<1>& u) const = 0;
    virtual Vec2T<DualN<2>> eval(const DualN<2>& q1, const DualN<2>& q2, const DualN<2>& u) const = 0;
    virtual Vec2T<DualN<3>> eval(const DualN<3>& q1, const DualN<3>& q2, const DualN<3>& u) const = 0;
    virtual Vec2T<DualN<4>> eval(const DualN<4>& q1, const DualN<4>& q2, const DualN<4>& u) const = 0;
};

template <class Derived>
class SystemEvaluatorBase : public SystemEvaluator {
  public:
    Vec2T<double> eval(const double& q1, const double& q2, const double& u) const override
    {
        return self().template eval_impl<double>(q1, q2, u);
    }
    Vec2T<DualN<1>> eval(const DualN<1>& q1, const DualN<1>& q2, const DualN<1>& u) const override
    {
        return self().template eval_impl<DualN<1>>(q1, q2, u);
    }
    Vec2T<DualN<2>> eval(const DualN<2>& q1, const DualN<2>& q2, const DualN<2>& u) const override
    {
        return self().template eval_impl<DualN<2>>(q1, q2, u);
    }
    Vec2T<DualN<3>> eval(const DualN<3>& q1, const DualN<3>& q2, const DualN<3>& u) const override
    {
        return self().template eval_impl<DualN<3>>(q1, q2, u);
    }
    Vec2T<DualN<4>> eval(const DualN<4>& q1, const DualN<4>& q2, const DualN<4>& u) const override
    {
        return self().template eval_impl<DualN<4>>(q1, q2, u);
    }

  private:
    const Derived& self() const { return static_cast<const Derived&>(*this); }
};

class AstSystemEvaluator final : public SystemEvaluatorBase<AstSystemEvaluator> {
  public:
    AstSystemEvaluator(ExprPtr f1, ExprPtr f2) : f1_(std::move(f1)), f2_(std::move(f2)) {}

    template <class T>
    Vec2T<T> eval_impl(const T& q1, const T& q2, const T& u) const
    {
        return {eval_expr(*f1_, q1, q2, u), eval_expr(*f2_, q1, q2, u)};
    }

    const ExprPtr& f1() const { return f1_; }
    const ExprPtr& f2() const { return f2_; }

  private:
    ExprPtr f1_, f2_;
};

enum class Provenance { builtin, parsed_expression, transformed };

struct BuiltinInfo {
    std::string family;
    std::map<std::string, std::string> expr_params;  // raw expression text per parameter
    int eps = +1;                                    // normal_form only
    double u_max = 0.0;                              // interval families
    ExprPtr shape;                                   // the family's scalar function (a or phi)
};

class SystemModel {
  public:
    SystemModel(std::string name, ControlDomain domain,
                std::shared_ptr<const SystemEvaluator> evaluator, Provenance provenance);

    const std::string& name() const { return name_; }
    const ControlDomain& domain() const { return domain_; }
    const SystemEvaluator& evaluator() const { return *evaluator_; }
    std::shared_ptr<const SystemEvaluator> evaluator_ptr() const { return evaluator_; }
    Provenance provenance() const { return provenance_; }
    const std::optional<BuiltinInfo>& builtin_info() const { return builtin_; }

    /// Exact jet of order <= 4 at (q, u), from forward-mode duals.
    Jet jet(const StatePoint& q, double u, int order) const;

    /// Serializes back to the system-definition JSON (expression-backed
    /// models only).
    std::string to_json() const;

    static SystemModel from_json(const std::string& text);
    static SystemModel from_file(const std::string& path);
    static SystemModel builtin(const std::string& family,
                               const std::map<std::string, std::string>& params);

    void set_builtin_info(BuiltinInfo info) { builtin_ = std::move(info); }
    void set_source(std::string f1, std::string f2)
    {
        f1_src_ = std::move(f1);
        f2_src_ = std::move(f2);
    }

  private:
    std::string name_;
    ControlDomain domain_;
    std::shared_ptr<const SystemEvaluator> evaluator_;
    Provenance provenance_;
    std::optional<BuiltinInfo> builtin_;
    std::string f1_src_, f2_src_;
};

/// parse_system: builds a model from the system-definition JSON text.
SystemModel parse_system(const std::string& json_text);

/// builtin_system: conformal_frame, zermelo, normal_form, abnormal_form.
SystemModel builtin_system(const std::string& family,
                           const std::map<std::string, std::string>& params);

}  // namespace curv2d
