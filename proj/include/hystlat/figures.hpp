#pragma once

// Bundled run configurations for the published figures (1-14). A figure may
// need several runs; each is named and written to its own subdirectory.

#include <string>
#include <vector>

#include "hystlat/config.hpp"
#include "hystlat/errors.hpp"

namespace hystlat {

struct BundledRun {
    std::string name;
    json config;
};

namespace detail {

inline json params_json(std::size_t n, double c, double k, double eps) {
    return {{"n_sites", n}, {"c", c}, {"k", k}, {"epsilon", eps}};
}

inline json grid_json(double start, double stop, double step) {
    return {{"start", start}, {"stop", stop}, {"step", step}};
}

inline std::string tag(const char* name, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%g", name, v);
    return buf;
}

inline json fcr_curve_json(const char* model, double c, double k, double eps) {
    return {{"experiment", "fcr-curve"},
            {"model", model},
            {"params", params_json(200, c, k, eps)},
            {"omega_grid", {2.5, 3.0, 3.5, 4.0, 4.5, 5.0}},
            {"f_grid", grid_json(0.2, 20.0, 0.1)}};
}

inline json ensemble_json(std::size_t n, double c, double f, double sigma) {
    return {{"experiment", "ensemble"}, {"model", "I"},   {"params", params_json(n, c, 0.1, 0.1)},
            {"f", f},                   {"omega", 3.0},   {"sigma", sigma},
            {"realizations", 250}};
}

}  // namespace detail

inline constexpr int kFigureCount = 14;

inline std::vector<BundledRun> bundled_figure(int figure) {
    using namespace detail;
    std::vector<BundledRun> runs;
    switch (figure) {
        case 1:
            for (double f : {2.7, 2.8})
                runs.push_back({tag("f", f),
                                {{"experiment", "single"},
                                 {"model", "I"},
                                 {"params", params_json(200, 0.01, 0.3, 0.1)},
                                 {"drive", {{"type", "sinusoidal"}, {"f", f}, {"omega", 2.5}}}}});
            runs.push_back({"sweep",
                            {{"experiment", "sweep"},
                             {"model", "I"},
                             {"params", params_json(200, 0.01, 0.3, 0.1)},
                             {"omega", 2.5},
                             {"f_grid", grid_json(2.5, 3.0, 0.1)}}});
            break;
        case 2:
            for (double c : {0.01, 0.1}) runs.push_back({tag("c", c), fcr_curve_json("I", c, 0.3, 0.1)});
            break;
        case 3:
            for (double eps : {0.01, 0.1}) runs.push_back({tag("eps", eps), fcr_curve_json("I", 0.01, 0.3, eps)});
            break;
        case 4:
            for (double k : {0.03, 0.3, 0.5}) runs.push_back({tag("k", k), fcr_curve_json("I", 0.1, k, 0.1)});
            break;
        case 5:
            for (double eps : {0.1, 0.0})
                runs.push_back({eps > 0 ? "nonlinear" : "quasilinear",
                                {{"experiment", "sweep"},
                                 {"model", "I"},
                                 {"params", params_json(100, 0.1, 0.1, eps)},
                                 {"omega", 3.0},
                                 {"f_grid", grid_json(0.2, 5.0, 0.1)}}});
            break;
        case 6:
            for (const char* model : {"I", "II"})
                for (double eps : {0.01, 0.1})
                    runs.push_back({std::string("model") + model + "_" + tag("eps", eps),
                                    fcr_curve_json(model, 0.01, 0.3, eps)});
            break;
        case 7:
        case 8:
            for (const char* model : {"I", "II"}) {
                json j = {{"experiment", "wavepacket"},
                          {"model", model},
                          {"params", params_json(200, 0.01, 0.01, 0.1)}};
                j["drive"] = figure == 7 ? json{{"type", "clamped"}}
                                         : json{{"type", "sinusoidal"}, {"f", 2.0}, {"omega", 3.0}};
                runs.push_back({std::string("model") + model, j});
            }
            break;
        case 9:
            runs.push_back({"ensemble", ensemble_json(200, 0.1, 3.6, 0.1)});
            break;
        case 10:
            for (double c : {0.001, 0.01, 0.1}) {
                for (double f : {3.4, 3.5, 3.6, 3.7, 3.8})
                    runs.push_back({tag("c", c) + "_" + tag("f", f), ensemble_json(200, c, f, 0.1)});
                for (double s : {0.05, 0.15, 0.2})
                    runs.push_back({tag("c", c) + "_" + tag("sigma", s), ensemble_json(200, c, 3.6, s)});
            }
            break;
        case 11:
            for (std::size_t n : {100u, 200u})
                for (double f : {3.2, 3.4, 3.6, 3.8, 4.0})
                    for (double s : {0.05, 0.1, 0.15, 0.2})
                        runs.push_back({"N" + std::to_string(n) + "_" + tag("f", f) + "_" + tag("sigma", s),
                                        ensemble_json(n, 0.1, f, s)});
            break;
        case 12: {
            auto dist = [](double c, double sigma) {
                return json{{"experiment", "fcr-dist"}, {"model", "I"},
                            {"params", params_json(200, c, 0.1, 0.1)},
                            {"omega", 3.0},            {"sigma", sigma},
                            {"f_grid", grid_json(2.8, 4.2, 0.1)},
                            {"realizations", 100}};
            };
            for (double c : {0.001, 0.01, 0.1}) runs.push_back({tag("c", c) + "_sigma0.1", dist(c, 0.1)});
            for (double s : {0.05, 0.2}) runs.push_back({"c0.1_" + tag("sigma", s), dist(0.1, s)});
            break;
        }
        case 13:
        case 14:
            for (const char* model : {"I", "II"}) {
                const bool first = model[1] == '\0';
                runs.push_back({std::string("model") + model,
                                {{"experiment", "breather"},
                                 {"model", model},
                                 {"params", params_json(200, 0.01, 0.3, 0.1)},
                                 {"drive", {{"type", "impulsive"}, {"f", 3.5}, {"omega", 4.0}}},
                                 {"observed_sites", first ? json{12, 15} : json{8, 11}}}});
            }
            break;
        default:
            throw ValidationError("--figure must be between 1 and " + std::to_string(kFigureCount));
    }
    return runs;
}

}  // namespace hystlat
