#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vpq/analysis.hpp"
#include "vpq/config.hpp"
#include "vpq/trainer.hpp"

namespace py = pybind11;
using namespace vpq;

namespace {

Mat mat_from_rows(const std::vector<Vec>& rows) {
    if (rows.empty()) throw ContractError("matrix needs at least one row");
    Mat m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) {
            throw ContractError("ragged matrix rows");
        }
        std::copy(rows[r].begin(), rows[r].end(), m.row(static_cast<int>(r)).begin());
    }
    return m;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Closed-form penalty analysis, penalized bootstrapping, and ranking "
              "metrics from the C++ core.";
    m.attr("__version__") = kVersion;

    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

    m.def("normal_quantile", &normal_quantile, py::arg("p"),
          "Inverse standard-normal CDF on (0, 1).");
    m.def("blom_c0", &blom_c0, py::arg("n"));
    m.def("blom_expected_max", &blom_expected_max, py::arg("n"), py::arg("mu"),
          py::arg("sigma"), "Blom approximation of E[max of n iid normals].");
    m.def(
        "expected_penalized",
        [](int n, double mu, double sigma, double lambda, const std::string& mode) {
            return expected_penalized(n, mu, sigma, lambda, penalty_mode_from_name(mode));
        },
        py::arg("n"), py::arg("mu"), py::arg("sigma"), py::arg("lambda_"), py::arg("mode"),
        "Closed-form expectation of the penalized max; mode in {none, p_sub, p_mul}.");
    m.def("absorbed_discount", &absorbed_discount, py::arg("gamma"), py::arg("w"),
          "2*gamma*W / (1 - gamma*W)^2.");
    m.def("penalty_weight", &penalty_weight, py::arg("sigma"), py::arg("lambda_"),
          "W = 1 / (1 + lambda*sigma).");

    m.def(
        "sample_mixture",
        [](int k, std::uint64_t seed) {
            Rng rng(seed);
            return sample_mixture(k, rng).alpha;
        },
        py::arg("k"), py::arg("seed"),
        "One simplex draw: k uniform(0,1] variates normalized by their sum.");

    m.def(
        "penalized_bootstrap",
        [](const std::vector<Vec>& qmat, const Vec& alpha, const std::string& mode,
           double lambda, double gamma) {
            PenaltyConfig cfg;
            cfg.mode = penalty_mode_from_name(mode);
            cfg.lambda = lambda;
            cfg.gamma = gamma;
            const PenalizedMax pm =
                penalized_bootstrap(mat_from_rows(qmat), MixtureWeights{alpha}, cfg);
            return py::make_tuple(pm.value, pm.argmax, pm.sigma, pm.w);
        },
        py::arg("qmat"), py::arg("alpha"), py::arg("mode"), py::arg("lambda_") = 20.0,
        py::arg("gamma") = 0.9,
        "Penalized max over a K x A matrix of target-head values; returns "
        "(value, argmax, sigma, w).");

    m.def(
        "uncertainty",
        [](const std::vector<Vec>& qmat) { return uncertainty(mat_from_rows(qmat)); },
        py::arg("qmat"), "Per-action sample SD across heads (K-1 divisor).");

    m.def(
        "push_item",
        [](const std::vector<std::int32_t>& window, std::int32_t item) {
            const StateWindow next = push_item(StateWindow::from_ids(window), item);
            return std::vector<std::int32_t>(next.ids().begin(), next.ids().end());
        },
        py::arg("window"), py::arg("item"));

    m.def(
        "hr_at_k",
        [](const std::vector<std::vector<std::int32_t>>& lists,
           const std::vector<std::pair<std::int32_t, std::string>>& truths, int k,
           const std::string& event) {
            std::vector<RecommendationList> recs;
            for (const auto& ids : lists) {
                RecommendationList rec;
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    rec.push_back({ids[i], static_cast<double>(ids.size() - i)});
                }
                recs.push_back(std::move(rec));
            }
            std::vector<GroundTruth> gts;
            for (const auto& [item, name] : truths) gts.push_back({item, event_from_name(name)});
            return hr_at_k(recs, gts, k, event_from_name(event));
        },
        py::arg("lists"), py::arg("truths"), py::arg("k"), py::arg("event"),
        "HR@k of ranked id lists against (item, event) truths.");

    m.def(
        "ndcg_at_k",
        [](const std::vector<std::vector<std::int32_t>>& lists,
           const std::vector<std::pair<std::int32_t, std::string>>& truths, int k,
           const std::string& event) {
            std::vector<RecommendationList> recs;
            for (const auto& ids : lists) {
                RecommendationList rec;
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    rec.push_back({ids[i], static_cast<double>(ids.size() - i)});
                }
                recs.push_back(std::move(rec));
            }
            std::vector<GroundTruth> gts;
            for (const auto& [item, name] : truths) gts.push_back({item, event_from_name(name)});
            return ndcg_at_k(recs, gts, k, event_from_name(event));
        },
        py::arg("lists"), py::arg("truths"), py::arg("k"), py::arg("event"));

    m.def(
        "penalty_toy",
        [](int n_points, double mu, double sigma, const std::vector<double>& lambdas,
           std::uint64_t seed) {
            const PenaltyToyTable t = penalty_toy(n_points, mu, sigma, lambdas, seed);
            py::dict out;
            out["x"] = t.x;
            out["u"] = t.u;
            out["lambdas"] = t.lambdas;
            out["p_sub"] = t.psub;
            out["p_mul"] = t.pmul;
            return out;
        },
        py::arg("n_points"), py::arg("mu"), py::arg("sigma"), py::arg("lambdas"),
        py::arg("seed"));

    m.def(
        "micro_q_star",
        [](int n_items, std::uint64_t seed, double gamma, double tol, double slip) {
            const MicroMDP mdp = MicroMDP::create(n_items, seed, slip);
            const Mat q = value_iteration(mdp, gamma, tol);
            std::vector<Vec> rows;
            rows.reserve(static_cast<std::size_t>(q.rows));
            for (int s = 0; s < q.rows; ++s) {
                rows.emplace_back(q.row(s).begin(), q.row(s).end());
            }
            return rows;
        },
        py::arg("n_items"), py::arg("seed"), py::arg("gamma") = 0.9,
        py::arg("tol") = 1e-8, py::arg("slip") = 0.0,
        "Exact Q* of a seeded micro MDP as a states x actions list of rows.");
}
