// shrinkcov command-line tool: Monte Carlo experiment runner (simulate),
// one-shot covariance estimation (estimate) and a rolling GMVP backtest
// (backtest). Tables go to CSV, diagnostics to JSON; reruns with the same
// seed and flags produce byte-identical files.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>

#include "shrinkcov/presets.hpp"
#include "shrinkcov/shrinkcov.hpp"

using json = nlohmann::ordered_json;
using namespace shrinkcov;

namespace {

const std::vector<std::string> kMethods = {"scm",     "rscm-ell1", "rscm-ell2",
                                           "tabasco", "coupled",   "linpool"};

std::string join(const std::vector<std::string>& items, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

void require_method(const std::string& method) {
    if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end())
        throw CLI::ValidationError("--method", "unknown method '" + method + "'; valid: " +
                                                   join(kMethods, ", "));
}

void emit(const SimTable& table, const std::string& path, const std::string& format) {
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!path.empty()) {
        file.open(path);
        if (!file) throw CLI::RuntimeError("cannot open output file " + path, 1);
        out = &file;
    }
    if (format == "json") {
        json arr = json::array();
        for (const auto& row : table.rows) {
            json obj;
            for (std::size_t i = 0; i < table.header.size(); ++i) obj[table.header[i]] = row[i];
            arr.push_back(obj);
        }
        *out << arr.dump(2) << "\n";
    } else {
        *out << join(table.header, ",") << "\n";
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) *out << ',';
                *out << format_double(row[i]);
            }
            *out << "\n";
        }
    }
}

json load_preset(const std::string& preset, const std::string& preset_dir) {
    const std::vector<std::filesystem::path> candidates = {
        std::filesystem::path(preset_dir) / (preset + ".json"),
        std::filesystem::path("presets") / (preset + ".json"),
    };
    for (const auto& path : candidates) {
        std::ifstream in(path);
        if (in) return json::parse(in);
    }
    throw CLI::RuntimeError("preset file " + preset + ".json not found (looked in " + preset_dir +
                                " and ./presets); pass --preset-dir",
                            1);
}

// ---------------------------------------------------------------------------
// estimate / backtest helpers
// ---------------------------------------------------------------------------

struct EstimateOutput {
    CovMatrix estimate;
    json diagnostics;
};

CovEstimator make_estimator(const std::string& method, Index template_cap) {
    if (method == "scm")
        return [](const Matrix& x) {
            return ShrinkResult{scm(x), 0.0, 1.0, ScalarEstimates{}, "", std::nullopt};
        };
    if (method == "rscm-ell1")
        return [](const Matrix& x) { return rscm(x, SphericityMethod::Ell1); };
    if (method == "rscm-ell2")
        return [](const Matrix& x) { return rscm(x, SphericityMethod::Ell2); };
    if (method == "tabasco")
        return [template_cap](const Matrix& x) {
            std::vector<TaperTemplate> ts;
            const Index p = x.cols();
            const Index kmax = std::min<Index>(p, template_cap);
            for (Index k = 1; k <= kmax; ++k) ts.push_back(banding_template(p, k));
            if (kmax < p) ts.push_back(banding_template(p, p));
            return tabasco(x, TemplateSet(std::move(ts)));
        };
    if (method == "linpool")
        return [](const Matrix& x) {
            // single panel: shrink S toward the identity through the
            // augmented one-class pooling weights
            const ClassPanel panel({x});
            const ClassScalars cs = estimate_class_scalars(panel);
            LinpoolOptions opt;
            opt.identity_augment = true;
            const Vector a = linpool_weights(cs, 0, opt);
            ShrinkResult r{linpool_estimate(panel, a), a(1), a(0), ScalarEstimates{}, "",
                           std::nullopt};
            return r;
        };
    throw CLI::ValidationError("--method", "method '" + method + "' is not valid here");
}

json scalar_diag(const ScalarEstimates& s) {
    return json{{"eta_hat", s.eta_hat},
                {"kappa_hat", s.kappa_hat},
                {"gamma_hat", s.gamma_hat},
                {"sphericity_method", to_string(s.method)}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"covariance shrinkage toolkit"};
    app.require_subcommand(1);

    // ---------------- simulate ----------------
    auto* sim = app.add_subcommand("simulate", "Monte Carlo experiments with theory columns");
    std::string preset, preset_dir = "presets", sim_out, sim_format = "csv";
    std::string sim_model = "ar1", sim_family = "gaussian";
    double sim_rho = 0.5, sim_decay = 0.1, sim_eta = 1.0, sim_dof = 8.0;
    Index sim_p = 50;
    std::vector<Index> sim_ns = {50};
    std::vector<std::string> sim_estimators = {"scm"};
    std::size_t sim_trials = 0;  // 0: use the preset default
    std::uint64_t sim_seed = 1;
    bool have_trials = false, have_p = false, have_seed = false;
    sim->add_option("--preset", preset, "preset name: fig1, fig3, fig4, setupA");
    sim->add_option("--preset-dir", preset_dir, "directory holding preset JSON files");
    sim->add_option("--model", sim_model, "covariance model: ar1 or cai");
    sim->add_option("--rho", sim_rho, "correlation parameter");
    sim->add_option("--alpha", sim_decay, "decay parameter of the cai model");
    sim->add_option("--eta", sim_eta, "scale of the ar1 model");
    sim->add_option("--p", sim_p, "dimension")->check(CLI::PositiveNumber)->each([&](std::string) {
        have_p = true;
    });
    sim->add_option("--n", sim_ns, "sample sizes")->delimiter(',');
    sim->add_option("--family", sim_family, "sampling family: gaussian or t");
    sim->add_option("--dof", sim_dof, "degrees of freedom for the t family");
    sim->add_option("--estimators", sim_estimators, "estimators to simulate")->delimiter(',');
    sim->add_option("--trials", sim_trials, "Monte Carlo trials")->each([&](std::string) {
        have_trials = true;
    });
    sim->add_option("--seed", sim_seed, "master seed")->each([&](std::string) { have_seed = true; });
    sim->add_option("--output", sim_out, "output file (stdout when omitted)");
    sim->add_option("--format", sim_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    // ---------------- estimate ----------------
    auto* est = app.add_subcommand("estimate", "estimate a covariance matrix from a CSV sample");
    std::vector<std::string> est_inputs;
    std::string est_method = "rscm-ell1", est_out = "estimate.csv", est_diag;
    Index est_template_cap = 30;
    bool est_prices = false, est_drop = false, est_simplex = false, est_no_identity = false;
    double est_eps = 1e-6;
    est->add_option("--input", est_inputs, "input CSV (repeat for multi-class methods)")
        ->required();
    est->add_option("--method", est_method, "one of: " + join(kMethods, ", "));
    est->add_option("--template-grid", est_template_cap, "max banding bandwidth for tabasco");
    est->add_option("--output", est_out, "estimate CSV path (per-class suffix for multi-class)");
    est->add_option("--diagnostics", est_diag, "diagnostics JSON path (stdout when omitted)");
    est->add_flag("--prices", est_prices, "input holds prices; convert to net returns");
    est->add_flag("--drop-incomplete", est_drop, "drop asset columns with missing values");
    est->add_flag("--simplex", est_simplex, "linpool: add the sum-to-one constraint");
    est->add_flag("--no-identity", est_no_identity, "linpool: disable identity augmentation");
    est->add_option("--eps", est_eps, "linpool: lower bound for the identity weight");

    // ---------------- backtest ----------------
    auto* bt = app.add_subcommand("backtest", "rolling out-of-sample GMVP risk");
    std::string bt_input, bt_method = "rscm-ell1", bt_report, bt_daily, bt_windows;
    Index bt_window = 100, bt_holding = 20, bt_template_cap = 30;
    double bt_annualize = std::sqrt(250.0);
    bool bt_prices = false, bt_drop = false;
    bt->add_option("--input", bt_input, "returns (or prices) CSV")->required();
    bt->add_option("--method", bt_method, "estimator: " + join(kMethods, ", "));
    bt->add_option("--window", bt_window, "training window length n");
    bt->add_option("--holding", bt_holding, "holding period in days");
    bt->add_option("--annualize", bt_annualize, "annualization factor (default sqrt(250))");
    bt->add_option("--template-grid", bt_template_cap, "max banding bandwidth for tabasco");
    bt->add_option("--output", bt_report, "report JSON path (stdout when omitted)");
    bt->add_option("--daily", bt_daily, "CSV path for the daily out-of-sample returns");
    bt->add_option("--coeff-log", bt_windows, "CSV path for the per-window coefficient log");
    bt->add_flag("--prices", bt_prices, "input holds prices; convert to net returns");
    bt->add_flag("--drop-incomplete", bt_drop, "drop asset columns with missing values");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            SimTable table;
            if (!preset.empty()) {
                const json cfg = load_preset(preset, preset_dir);
                const std::string kind = cfg.at("preset");
                const std::size_t trials =
                    have_trials ? sim_trials : cfg.value("trials", std::size_t(1000));
                const std::uint64_t seed = have_seed ? sim_seed : cfg.value("seed", 1);
                if (trials == 0) throw CLI::ValidationError("--trials", "trial count must be >= 1");
                if (kind == "fig1") {
                    table = run_fig1(cfg.value("n", 10), cfg.value("dof", 5.0), trials, seed);
                } else if (kind == "fig3") {
                    table = run_fig3(have_p ? sim_p : Index(cfg.value("p", 250)),
                                     cfg.value("n", 100), cfg.value("rho", 0.6),
                                     cfg.value("alpha", 0.1), cfg.value("family", "gaussian"),
                                     cfg.value("dof", 5.0), trials, seed);
                } else if (kind == "fig4") {
                    table = run_fig4(have_p ? sim_p : Index(cfg.value("p", 50)),
                                     cfg.value("gammas", std::vector<double>{1.1, 2.0, 9.0}),
                                     cfg.value("family", "gaussian"), cfg.value("dof", 8.0),
                                     trials, seed);
                } else if (kind == "setupA") {
                    const auto ns_raw = cfg.value("n", std::vector<int>{25, 50, 75, 100});
                    std::vector<Index> ns(ns_raw.begin(), ns_raw.end());
                    table = run_setup_a(
                        have_p ? sim_p : Index(cfg.value("p", 200)),
                        cfg.value("rhos", std::vector<double>{0.2, 0.3, 0.4, 0.5}),
                        cfg.value("etas", std::vector<double>{1.0, 1.0, 1.0, 1.0}), ns,
                        cfg.value("family", "t"), cfg.value("dof", 8.0), trials, seed);
                } else {
                    throw CLI::RuntimeError("unknown preset kind '" + kind + "'", 1);
                }
            } else {
                if (sim_trials == 0) sim_trials = 1000;
                table = run_generic(sim_model, sim_eta, sim_rho, sim_decay, sim_p, sim_ns,
                                    sim_family, sim_dof, sim_estimators, sim_trials, sim_seed);
            }
            emit(table, sim_out, sim_format);
        } else if (est->parsed()) {
            require_method(est_method);
            IngestOptions opt;
            opt.prices = est_prices;
            opt.drop_incomplete = est_drop;

            if (est_method == "coupled" || est_method == "linpool") {
                std::vector<Matrix> xs;
                for (const std::string& path : est_inputs)
                    xs.push_back(ingest_returns(path, opt).returns);
                const ClassPanel panel(std::move(xs));
                json diag;
                diag["method"] = est_method;
                diag["p"] = panel.dim();
                for (std::size_t k = 0; k < panel.num_classes(); ++k)
                    diag["n"].push_back(panel.class_size(k));
                std::vector<CovMatrix> estimates;
                if (est_method == "coupled") {
                    const CoupledFit fit = streamlined_fit(panel);
                    estimates = fit.estimates;
                    diag["alpha_hat"] = fit.alpha;
                    diag["beta_hat"] = fit.beta;
                    diag["eta_hat"] = fit.scalars.eta;
                    diag["kappa_hat"] = fit.scalars.kappa;
                    diag["gamma_hat"] = fit.scalars.gamma;
                } else {
                    const ClassScalars cs = estimate_class_scalars(panel);
                    LinpoolOptions lopt;
                    lopt.identity_augment = !est_no_identity;
                    lopt.simplex = est_simplex;
                    lopt.eps = est_eps;
                    diag["eta_hat"] = cs.eta;
                    diag["kappa_hat"] = cs.kappa;
                    diag["gamma_hat"] = cs.gamma;
                    for (std::size_t k = 0; k < panel.num_classes(); ++k) {
                        const Vector a = linpool_weights(cs, k, lopt);
                        estimates.push_back(linpool_estimate(panel, a));
                        diag["weights"].push_back(std::vector<double>(a.data(),
                                                                      a.data() + a.size()));
                    }
                }
                const std::filesystem::path base(est_out);
                for (std::size_t k = 0; k < estimates.size(); ++k) {
                    std::filesystem::path path = base;
                    path.replace_filename(base.stem().string() + "_class" + std::to_string(k) +
                                          base.extension().string());
                    write_matrix_csv(path.string(), estimates[k].matrix());
                    diag["estimate_files"].push_back(path.string());
                }
                if (est_diag.empty()) {
                    std::cout << diag.dump(2) << "\n";
                } else {
                    std::ofstream out(est_diag);
                    out << diag.dump(2) << "\n";
                }
            } else {
                const ReturnsPanel panel = ingest_returns(est_inputs.front(), opt);
                const CovEstimator estimator = make_estimator(est_method, est_template_cap);
                const ShrinkResult r = estimator(panel.returns);
                write_matrix_csv(est_out, r.estimate.matrix());
                json diag;
                diag["method"] = est_method;
                diag["p"] = panel.num_assets();
                diag["n"] = panel.num_days();
                diag["alpha_hat"] = r.alpha_hat;
                diag["beta_hat"] = r.beta_hat;
                if (est_method != "scm") diag["scalars"] = scalar_diag(r.scalars);
                if (!r.template_label.empty()) diag["template"] = r.template_label;
                diag["estimate_file"] = est_out;
                if (est_diag.empty()) {
                    std::cout << diag.dump(2) << "\n";
                } else {
                    std::ofstream out(est_diag);
                    out << diag.dump(2) << "\n";
                }
            }
        } else if (bt->parsed()) {
            require_method(bt_method);
            if (bt_method == "coupled")
                throw CLI::ValidationError("--method",
                                           "the backtest consumes a single panel; coupled "
                                           "shrinkage needs class-labelled data");
            IngestOptions opt;
            opt.prices = bt_prices;
            opt.drop_incomplete = bt_drop;
            const ReturnsPanel panel = ingest_returns(bt_input, opt);
            BacktestConfig config;
            config.window = bt_window;
            config.holding = bt_holding;
            config.annualize = bt_annualize;
            config.estimator = make_estimator(bt_method, bt_template_cap);
            config.estimator_name = bt_method;
            const BacktestResult result = backtest(panel, config);

            json report;
            report["method"] = bt_method;
            report["window"] = bt_window;
            report["holding"] = bt_holding;
            report["annualize"] = bt_annualize;
            report["num_assets"] = panel.num_assets();
            report["num_days"] = panel.num_days();
            report["num_oos_days"] = result.daily_returns.size();
            report["realized_risk_annualized"] = result.realized_risk_annualized;
            for (const WindowLog& w : result.windows) {
                json wj;
                wj["index"] = w.index;
                wj["train_begin"] = w.train_begin;
                wj["train_end"] = w.train_end;
                wj["eval_begin"] = w.eval_begin;
                wj["eval_end"] = w.eval_end;
                wj["beta_hat"] = w.beta_hat;
                wj["alpha_hat"] = w.alpha_hat;
                if (!w.template_label.empty()) wj["template"] = w.template_label;
                report["windows"].push_back(wj);
            }
            if (bt_report.empty()) {
                std::cout << report.dump(2) << "\n";
            } else {
                std::ofstream out(bt_report);
                out << report.dump(2) << "\n";
            }
            if (!bt_daily.empty()) {
                Matrix col(result.daily_returns.size(), 1);
                col.col(0) = result.daily_returns;
                write_matrix_csv(bt_daily, col);
            }
            if (!bt_windows.empty()) {
                SimTable log;
                log.header = {"window", "train_begin", "train_end", "eval_begin", "eval_end",
                              "beta_hat", "alpha_hat"};
                for (const WindowLog& w : result.windows)
                    log.rows.push_back({static_cast<double>(w.index),
                                        static_cast<double>(w.train_begin),
                                        static_cast<double>(w.train_end),
                                        static_cast<double>(w.eval_begin),
                                        static_cast<double>(w.eval_end), w.beta_hat, w.alpha_hat});
                emit(log, bt_windows, "csv");
            }
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
