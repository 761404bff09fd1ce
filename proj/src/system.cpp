#include "curv2d/system.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace curv2d {

namespace {

// Multi-index table for total order <= 4 in three variables: 35 entries.
constexpr int kSlots = 35;

int multi_index_slot(int i, int j, int k)
{
    int slot = 0;
    for (int n = 0; n < i + j + k; ++n) slot += (n + 1) * (n + 2) / 2;
    // within order n = i+j+k: enumerate (i',j',k') with i'+j'+k' = n in
    // lexicographic order of (i', j')
    int n = i + j + k;
    int offset = 0;
    for (int ii = n; ii > i; --ii) offset += n - ii + 1;
    offset += n - i - j;
    return slot + offset;
}

}  // namespace

Jet::Jet(int order) : order_(order)
{
    if (order < 0 || order > kMaxOrder)
        throw Error(Errc::invalid_argument, "jet order must be in [0,4]");
    vals_.fill(std::numeric_limits<double>::quiet_NaN());
}

int Jet::pack(int i, int j, int k) { return multi_index_slot(i, j, k); }

double Jet::partial(int component, int i, int j, int k) const
{
    if (component < 0 || component > 1 || i < 0 || j < 0 || k < 0 || i + j + k > order_)
        throw Error(Errc::invalid_argument, "jet partial index out of range");
    return vals_[static_cast<size_t>(component * kSlots + pack(i, j, k))];
}

void Jet::set_partial(int component, int i, int j, int k, double value)
{
    vals_[static_cast<size_t>(component * kSlots + pack(i, j, k))] = value;
}

Jet Jet::restrict_order(int lower) const
{
    Jet out(lower);
    for (int i = 0; i <= lower; ++i)
        for (int j = 0; i + j <= lower; ++j)
            for (int k = 0; i + j + k <= lower; ++k) {
                out.set_partial(0, i, j, k, partial(0, i, j, k));
                out.set_partial(1, i, j, k, partial(1, i, j, k));
            }
    return out;
}

namespace {

template <int N>
void fill_jet_depth(const SystemEvaluator& ev, double q1, double q2, double u, Jet& jet)
{
    // nondecreasing direction tuples cover every multiset of <= N
    // derivative directions
    int dirs[N > 0 ? N : 1];
    bool written[2][kSlots] = {};
    auto visit = [&](auto&& self, int level, int min_dir) -> void {
        if (level == N) {
            auto Q1 = seed_coord<N>(q1, 0, dirs);
            auto Q2 = seed_coord<N>(q2, 1, dirs);
            auto U = seed_coord<N>(u, 2, dirs);
            auto f = ev.eval(Q1, Q2, U);
            for (unsigned mask = 0; mask < (1u << N); ++mask) {
                int idx[3] = {0, 0, 0};
                for (int l = 0; l < N; ++l)
                    if (mask & (1u << l)) ++idx[dirs[l]];
                int slot = multi_index_slot(idx[0], idx[1], idx[2]);
                if (!written[0][slot]) {
                    jet.set_partial(0, idx[0], idx[1], idx[2], dual_component<N>(f.x, mask));
                    jet.set_partial(1, idx[0], idx[1], idx[2], dual_component<N>(f.y, mask));
                    written[0][slot] = true;
                }
            }
            return;
        }
        for (int dir = min_dir; dir < 3; ++dir) {
            dirs[level] = dir;
            self(self, level + 1, dir);
        }
    };
    if constexpr (N == 0) {
        auto f = ev.eval(q1, q2, u);
        jet.set_partial(0, 0, 0, 0, f.x);
        jet.set_partial(1, 0, 0, 0, f.y);
    } else {
        visit(visit, 0, 0);
    }
}

}  // namespace

SystemModel::SystemModel(std::string name, ControlDomain domain,
                         std::shared_ptr<const SystemEvaluator> evaluator, Provenance provenance)
    : name_(std::move(name)),
      domain_(domain),
      evaluator_(std::move(evaluator)),
      provenance_(provenance)
{
}

Jet SystemModel::jet(const StatePoint& q, double u, int order) const
{
    if (!std::isfinite(q.q1) || !std::isfinite(q.q2) || !std::isfinite(u))
        throw Error(Errc::domain_error, "jet point must be finite");
    Jet out(order);
    switch (order) {
        case 0: fill_jet_depth<0>(*evaluator_, q.q1, q.q2, u, out); break;
        case 1: fill_jet_depth<1>(*evaluator_, q.q1, q.q2, u, out); break;
        case 2: fill_jet_depth<2>(*evaluator_, q.q1, q.q2, u, out); break;
        case 3: fill_jet_depth<3>(*evaluator_, q.q1, q.q2, u, out); break;
        case 4: fill_jet_depth<4>(*evaluator_, q.q1, q.q2, u, out); break;
        default: throw Error(Errc::invalid_argument, "jet order must be in [0,4]");
    }
    return out;
}

namespace {

using nlohmann::json;

ExprPtr parse_param(const std::string& family, const std::string& key, const std::string& text)
{
    try {
        return parse_expression(text);
    } catch (const Error& e) {
        throw Error(e.code(), family + " parameter '" + key + "': " + e.what());
    }
}

std::string get_expr_param(const std::map<std::string, std::string>& params, const std::string& key,
                           const std::string& fallback)
{
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

}  // namespace

SystemModel builtin_system(const std::string& family,
                           const std::map<std::string, std::string>& params)
{
    auto numeric_param = [&](const std::string& key, double fallback) {
        auto it = params.find(key);
        if (it == params.end()) return fallback;
        try {
            size_t used = 0;
            double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument(key);
            return v;
        } catch (const std::exception&) {
            throw Error(Errc::syntax_error, "builtin parameter '" + key + "' must be numeric");
        }
    };

    std::string f1, f2;
    ControlDomain domain;
    BuiltinInfo info;
    info.family = family;

    if (family == "conformal_frame" || family == "zermelo") {
        std::string phi = get_expr_param(params, "phi", "0");
        info.expr_params["phi"] = phi;
        info.shape = parse_param(family, "phi", phi);
        f1 = "exp(-(" + phi + "))*cos(u)";
        f2 = "exp(-(" + phi + "))*sin(u)";
        if (family == "zermelo") {
            std::string d1 = get_expr_param(params, "drift1", "0");
            std::string d2 = get_expr_param(params, "drift2", "0");
            info.expr_params["drift1"] = d1;
            info.expr_params["drift2"] = d2;
            parse_param(family, "drift1", d1);
            parse_param(family, "drift2", d2);
            f1 += " + (" + d1 + ")";
            f2 += " + (" + d2 + ")";
        }
        domain.kind = ControlDomain::Kind::circle;
    } else if (family == "normal_form") {
        std::string a = get_expr_param(params, "a", "0");
        info.expr_params["a"] = a;
        info.shape = parse_param(family, "a", a);
        double eps = numeric_param("eps", 1.0);
        if (eps != 1.0 && eps != -1.0)
            throw Error(Errc::invalid_argument, "normal_form eps must be +1 or -1");
        info.eps = static_cast<int>(eps);
        f1 = "u";
        f2 = eps > 0 ? "1 - exp(2*(" + a + "))*u^2" : "1 + exp(2*(" + a + "))*u^2";
        info.u_max = numeric_param("u_max", 0.9);
        domain = {ControlDomain::Kind::interval, -info.u_max, info.u_max};
    } else if (family == "abnormal_form") {
        std::string a = get_expr_param(params, "a", "0");
        info.expr_params["a"] = a;
        info.shape = parse_param(family, "a", a);
        f1 = "u";
        f2 = "exp(2*(" + a + "))*(1-u)^2";
        info.u_max = numeric_param("u_max", 2.0);
        domain = {ControlDomain::Kind::interval, -info.u_max, info.u_max};
    } else {
        throw Error(Errc::unknown_family, "unknown builtin family '" + family + "'");
    }

    auto ev = std::make_shared<AstSystemEvaluator>(parse_param(family, "f1", f1),
                                                   parse_param(family, "f2", f2));
    SystemModel model(family, domain, ev, Provenance::builtin);
    model.set_builtin_info(std::move(info));
    model.set_source(f1, f2);
    return model;
}

SystemModel parse_system(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error(Errc::syntax_error, std::string("system definition is not valid JSON: ") +
                                            e.what());
    }
    if (!j.is_object()) throw Error(Errc::syntax_error, "system definition must be a JSON object");

    if (j.contains("builtin")) {
        std::map<std::string, std::string> params;
        if (j.contains("params")) {
            for (auto& [key, value] : j["params"].items()) {
                if (value.is_string())
                    params[key] = value.get<std::string>();
                else
                    params[key] = value.dump();
            }
        }
        SystemModel m = builtin_system(j["builtin"].get<std::string>(), params);
        if (j.contains("name")) {
            SystemModel named(j["name"].get<std::string>(), m.domain(), m.evaluator_ptr(),
                              Provenance::builtin);
            named.set_builtin_info(*m.builtin_info());
            return named;
        }
        return m;
    }

    for (const char* key : {"f1", "f2", "control_domain"})
        if (!j.contains(key))
            throw Error(Errc::domain_error, std::string("missing field '") + key + "'");

    std::string f1 = j["f1"].get<std::string>();
    std::string f2 = j["f2"].get<std::string>();

    ControlDomain domain;
    const json& cd = j["control_domain"];
    if (!cd.is_object() || !cd.contains("kind"))
        throw Error(Errc::domain_error, "control_domain must carry a 'kind'");
    std::string kind = cd["kind"].get<std::string>();
    if (kind == "circle") {
        domain.kind = ControlDomain::Kind::circle;
    } else if (kind == "interval") {
        if (!cd.contains("min") || !cd.contains("max"))
            throw Error(Errc::domain_error, "interval control_domain needs min and max");
        domain = {ControlDomain::Kind::interval, cd["min"].get<double>(), cd["max"].get<double>()};
        if (!(domain.min < domain.max))
            throw Error(Errc::domain_error, "interval control_domain needs min < max");
    } else {
        throw Error(Errc::domain_error, "control_domain kind must be 'circle' or 'interval'");
    }

    ExprPtr e1, e2;
    try {
        e1 = parse_expression(f1);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("f1: ") + e.what());
    }
    try {
        e2 = parse_expression(f2);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("f2: ") + e.what());
    }

    auto ev = std::make_shared<AstSystemEvaluator>(std::move(e1), std::move(e2));
    SystemModel model(j.value("name", std::string("system")), domain, ev,
                      Provenance::parsed_expression);
    model.set_source(f1, f2);
    return model;
}

SystemModel SystemModel::from_json(const std::string& text) { return parse_system(text); }

SystemModel SystemModel::from_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open system file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_system(ss.str());
}

std::string SystemModel::to_json() const
{
    json j;
    if (provenance_ == Provenance::builtin && builtin_) {
        j["builtin"] = builtin_->family;
        json p = json::object();
        for (const auto& [k, v] : builtin_->expr_params) p[k] = v;
        if (builtin_->family == "normal_form") p["eps"] = builtin_->eps;
        if (builtin_->u_max != 0.0) p["u_max"] = builtin_->u_max;
        j["params"] = p;
        j["name"] = name_;
    } else if (!f1_src_.empty()) {
        j["name"] = name_;
        j["f1"] = f1_src_;
        j["f2"] = f2_src_;
        if (domain_.kind == ControlDomain::Kind::circle) {
            j["control_domain"] = {{"kind", "circle"}};
        } else {
            j["control_domain"] = {{"kind", "interval"}, {"min", domain_.min}, {"max", domain_.max}};
        }
    } else {
        throw Error(Errc::invalid_argument,
                    "model has no expression source; cannot serialize a transformed system");
    }
    return j.dump(2);
}

}  // namespace curv2d
