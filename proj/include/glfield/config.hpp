#ifndef GLFIELD_CONFIG_HPP
#define GLFIELD_CONFIG_HPP

#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "glfield/errors.hpp"
#include "glfield/network.hpp"

namespace glfield {

using json = nlohmann::json;

struct Experiment {
    NetworkSpec spec;
    RunConfig run;
};

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::string& where,
                                std::set<std::string> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw SchemaError("unknown key \"" + it.key() + "\" in " + where);
}

inline double get_number(const json& obj, const std::string& where,
                         const std::string& key) {
    if (!obj.contains(key))
        throw SchemaError("missing key \"" + key + "\" in " + where);
    if (!obj.at(key).is_number())
        throw SchemaError(where + "." + key + ": expected a number");
    return obj.at(key).get<double>();
}

inline double get_number_or(const json& obj, const std::string& where,
                            const std::string& key, double fallback) {
    if (!obj.contains(key))
        return fallback;
    if (!obj.at(key).is_number())
        throw SchemaError(where + "." + key + ": expected a number");
    return obj.at(key).get<double>();
}

inline std::string get_string(const json& obj, const std::string& where,
                              const std::string& key) {
    if (!obj.contains(key))
        throw SchemaError("missing key \"" + key + "\" in " + where);
    if (!obj.at(key).is_string())
        throw SchemaError(where + "." + key + ": expected a string");
    return obj.at(key).get<std::string>();
}

inline std::vector<double> get_vector(const json& obj, const std::string& where,
                                      const std::string& key) {
    if (!obj.contains(key) || !obj.at(key).is_array())
        throw SchemaError(where + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : obj.at(key)) {
        if (!v.is_number())
            throw SchemaError(where + "." + key + ": expected numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline WeightKernel parse_kernel(const json& j) {
    std::string kind = get_string(j, "kernel", "kind");
    if (kind == "constant") {
        reject_unknown_keys(j, "kernel", {"kind", "value"});
        return WeightKernel::constant(get_number(j, "kernel", "value"));
    }
    if (kind == "gaussian_bump") {
        reject_unknown_keys(j, "kernel", {"kind", "amplitude", "width"});
        return WeightKernel::gaussian_bump(get_number(j, "kernel", "amplitude"),
                                           get_number(j, "kernel", "width"));
    }
    if (kind == "cosine") {
        reject_unknown_keys(j, "kernel", {"kind", "amplitude", "frequency"});
        return WeightKernel::cosine(get_number(j, "kernel", "amplitude"),
                                    get_number(j, "kernel", "frequency"));
    }
    if (kind == "tabulated") {
        reject_unknown_keys(j, "kernel", {"kind", "x_nodes", "y_nodes", "values"});
        if (!j.contains("values") || !j.at("values").is_array())
            throw SchemaError("kernel.values: expected a matrix");
        std::vector<std::vector<double>> values;
        for (const auto& row : j.at("values")) {
            values.emplace_back();
            for (const auto& v : row)
                values.back().push_back(v.get<double>());
        }
        return WeightKernel::tabulated(get_vector(j, "kernel", "x_nodes"),
                                       get_vector(j, "kernel", "y_nodes"),
                                       std::move(values));
    }
    throw SchemaError("kernel.kind: unknown kind \"" + kind + "\"");
}

inline ResetField parse_reset(const json& j) {
    std::string kind = get_string(j, "reset", "kind");
    if (kind == "constant") {
        reject_unknown_keys(j, "reset", {"kind", "value"});
        return ResetField::constant(get_number(j, "reset", "value"));
    }
    if (kind == "tabulated") {
        reject_unknown_keys(j, "reset", {"kind", "nodes", "values"});
        return ResetField::tabulated(get_vector(j, "reset", "nodes"),
                                     get_vector(j, "reset", "values"));
    }
    throw SchemaError("reset.kind: unknown kind \"" + kind + "\"");
}

inline InitialLaw parse_initial(const json& j) {
    std::string kind = get_string(j, "initial", "kind");
    if (kind == "constant") {
        reject_unknown_keys(j, "initial", {"kind", "value"});
        return InitialLaw::constant(get_number(j, "initial", "value"));
    }
    if (kind == "uniform") {
        reject_unknown_keys(j, "initial", {"kind", "a", "b"});
        return InitialLaw::uniform(get_number(j, "initial", "a"),
                                   get_number(j, "initial", "b"));
    }
    if (kind == "exponential") {
        reject_unknown_keys(j, "initial", {"kind", "mean"});
        return InitialLaw::exponential(get_number(j, "initial", "mean"));
    }
    throw SchemaError("initial.kind: unknown kind \"" + kind + "\"");
}

} // namespace detail

inline Experiment parse_config(const json& root) {
    using namespace detail;
    if (!root.is_object())
        throw SchemaError("config root must be a JSON object");
    reject_unknown_keys(root, "config",
                        {"domain", "dynamics", "kernel", "reset", "initial", "run"});
    if (!root.contains("domain"))
        throw SchemaError("missing key \"domain\" in config");
    if (!root.contains("dynamics"))
        throw SchemaError("missing key \"dynamics\" in config");

    Experiment exp;

    const json& dj = root.at("domain");
    reject_unknown_keys(dj, "domain", {"lo", "hi"});
    try {
        exp.spec.domain = SpatialDomain(get_number(dj, "domain", "lo"),
                                        get_number(dj, "domain", "hi"));
    } catch (const ValidationError&) {
        throw ValidationError("domain: requires finite lo < hi");
    }

    const json& yj = root.at("dynamics");
    reject_unknown_keys(yj, "dynamics", {"kind", "b", "tau"});
    std::string dyn_kind = get_string(yj, "dynamics", "kind");
    double b = get_number(yj, "dynamics", "b");
    double tau = get_number(yj, "dynamics", "tau");
    if (!(b > 0.0) || !std::isfinite(b))
        throw ValidationError("dynamics.b: must be > 0 and finite");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw ValidationError("dynamics.tau: must be > 0 and finite");
    if (dyn_kind == "leaky")
        exp.spec.dynamics = AutonomousDynamics::leaky(b, tau);
    else if (dyn_kind == "quadratic")
        exp.spec.dynamics = AutonomousDynamics::quadratic(b, tau);
    else
        throw SchemaError("dynamics.kind: expected \"leaky\" or \"quadratic\"");

    exp.spec.kernel = root.contains("kernel") ? parse_kernel(root.at("kernel"))
                                              : WeightKernel::constant(0.0);
    exp.spec.reset = root.contains("reset") ? parse_reset(root.at("reset"))
                                            : ResetField::constant(0.0);
    exp.spec.initial = root.contains("initial")
                           ? parse_initial(root.at("initial"))
                           : InitialLaw::constant(0.0);

    if (root.contains("run")) {
        const json& rj = root.at("run");
        reject_unknown_keys(rj, "run", {"T", "K", "M", "trials", "seed", "dt_out"});
        exp.run.horizon = get_number_or(rj, "run", "T", 1.0);
        exp.run.k_sites = std::size_t(get_number_or(rj, "run", "K", 2));
        exp.run.m_replicas = std::size_t(get_number_or(rj, "run", "M", 2));
        exp.run.trials = std::size_t(get_number_or(rj, "run", "trials", 1));
        exp.run.seed = std::uint64_t(get_number_or(rj, "run", "seed", 0));
        exp.run.dt_out = get_number_or(rj, "run", "dt_out", 0.1);
    }
    exp.run.validate();
    exp.spec.horizon = exp.run.horizon;
    return exp;
}

inline Experiment load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open config file: " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON in " + path + ": " + e.what());
    }
    return parse_config(root);
}

inline json serialize_config(const Experiment& exp) {
    json root;
    root["domain"] = {{"lo", exp.spec.domain.lo}, {"hi", exp.spec.domain.hi}};
    root["dynamics"] = {
        {"kind",
         exp.spec.dynamics.kind() == DynamicsKind::Leaky ? "leaky" : "quadratic"},
        {"b", exp.spec.dynamics.b()},
        {"tau", exp.spec.dynamics.tau()}};

    const WeightKernel& k = exp.spec.kernel;
    switch (k.kind()) {
    case KernelKind::Constant:
        root["kernel"] = {{"kind", "constant"}, {"value", k.amplitude()}};
        break;
    case KernelKind::GaussianBump:
        root["kernel"] = {{"kind", "gaussian_bump"},
                          {"amplitude", k.amplitude()},
                          {"width", k.param()}};
        break;
    case KernelKind::Cosine:
        root["kernel"] = {{"kind", "cosine"},
                          {"amplitude", k.amplitude()},
                          {"frequency", k.param()}};
        break;
    case KernelKind::TabulatedGrid:
        root["kernel"] = {{"kind", "tabulated"},
                          {"x_nodes", k.x_nodes()},
                          {"y_nodes", k.y_nodes()},
                          {"values", k.table()}};
        break;
    }

    if (exp.spec.reset.kind() == ResetKind::Constant)
        root["reset"] = {{"kind", "constant"}, {"value", exp.spec.reset.max_value()}};
    else
        root["reset"] = {{"kind", "tabulated"},
                         {"nodes", exp.spec.reset.nodes()},
                         {"values", exp.spec.reset.values()}};

    const InitialLaw& init = exp.spec.initial;
    switch (init.kind()) {
    case InitialKind::Constant:
        root["initial"] = {{"kind", "constant"}, {"value", init.a()}};
        break;
    case InitialKind::Uniform:
        root["initial"] = {{"kind", "uniform"}, {"a", init.a()}, {"b", init.b()}};
        break;
    case InitialKind::Exponential:
        root["initial"] = {{"kind", "exponential"}, {"mean", init.a()}};
        break;
    }

    root["run"] = {{"T", exp.run.horizon},        {"K", double(exp.run.k_sites)},
                   {"M", double(exp.run.m_replicas)}, {"trials", double(exp.run.trials)},
                   {"seed", double(exp.run.seed)}, {"dt_out", exp.run.dt_out}};
    return root;
}

} // namespace glfield

#endif
