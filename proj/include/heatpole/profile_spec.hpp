#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pde.hpp"
#include "profile_dsl.hpp"
#include "profiles.hpp"

namespace heatpole {

class ProfileSpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline double parse_spec_number(std::string_view v, std::string_view what)
{
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty())
        throw ProfileSpecError("bad value for " + std::string(what) + ": '" + std::string(v) + "'");
    return x;
}

// "a=1,b=2" -> lookup by key; unknown keys are rejected.
inline std::vector<std::pair<std::string, std::string>> parse_params(std::string_view body)
{
    std::vector<std::pair<std::string, std::string>> out;
    while (!body.empty()) {
        auto comma = body.find(',');
        auto item = body.substr(0, comma);
        auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ProfileSpecError("expected key=value, got '" + std::string(item) + "'");
        out.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
    }
    return out;
}

} // namespace detail

// Profile names: ilog:k=<K>,eps=<E> | level-set:c=<C> | halfspace[:r=<R>] | expr:<text>
inline Profile resolve_profile(std::string_view text, Side side, int dim)
{
    auto colon = text.find(':');
    std::string_view kind = text.substr(0, colon);
    std::string_view body = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

    if (kind == "expr") return dsl::make_expression_profile(body, side);

    auto params = detail::parse_params(body);
    auto take = [&](const std::string& key, std::optional<double> def) {
        for (auto it = params.begin(); it != params.end(); ++it)
            if (it->first == key) {
                double v = detail::parse_spec_number(it->second, key);
                params.erase(it);
                return v;
            }
        if (!def) throw ProfileSpecError("missing parameter '" + key + "' in '" + std::string(text) + "'");
        return *def;
    };
    auto done = [&] {
        if (!params.empty()) throw ProfileSpecError("unknown parameter '" + params.front().first + "'");
    };

    if (kind == "ilog") {
        double k = take("k", std::nullopt);
        double eps = take("eps", 0.0);
        done();
        if (k != std::floor(k)) throw ProfileSpecError("k must be an integer");
        return make_family_profile({static_cast<int>(k), eps, dim}, side);
    }
    if (kind == "level-set") {
        double c = take("c", 1.0);
        done();
        if (side != Side::Plus) throw ProfileSpecError("level-set domains are plus-side only");
        return level_set_domain(c, dim);
    }
    if (kind == "halfspace") {
        double r = take("r", 1e3);
        done();
        if (side != Side::Plus) throw ProfileSpecError("halfspace is plus-side only");
        return halfspace_profile(r);
    }
    throw ProfileSpecError("unknown profile kind '" + std::string(kind) + "'");
}

} // namespace heatpole
