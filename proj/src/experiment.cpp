#include "isaacs/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "isaacs/campaigns.hpp"
#include "isaacs/certify.hpp"
#include "isaacs/dpp.hpp"
#include "isaacs/error.hpp"
#include "isaacs/games.hpp"
#include "isaacs/parallel.hpp"
#include "isaacs/pde.hpp"
#include "isaacs/test_function.hpp"

namespace fs = std::filesystem;

namespace isaacs {

namespace {

constexpr const char* kHeader = "#isaacs-lab-v1";

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

Vec to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Largest W - U over the window nodes of every slice.
double order_violation(const ValueField& lower, const ValueField& upper, double window) {
    double worst = -INFINITY;
    const std::vector<int> nodes = lower.sgrid.window_nodes(window);
    for (int k = 0; k <= lower.steps(); ++k)
        for (int j : nodes) worst = std::max(worst, lower.slice(k)[j] - upper.slice(k)[j]);
    return worst;
}

class Runner {
public:
    Runner(ExperimentConfig cfg, const RunOverrides& ov, std::ostream& log)
        : cfg_(std::move(cfg)), log_(log) {
        if (ov.seed) cfg_.seed = *ov.seed;
        if (ov.threads) cfg_.threads = *ov.threads;
        set_thread_count(static_cast<unsigned>(cfg_.threads));
        game_ = make_game(cfg_.family, cfg_.params);
        if (cfg_.u_points) game_.controls.u_points = *cfg_.u_points;
        if (cfg_.v_points) game_.controls.v_points = *cfg_.v_points;
        game_.controls.validate();

        std::vector<StateGrid::Axis> axes;
        for (std::size_t i = 0; i < cfg_.nodes.size(); ++i) axes.push_back({cfg_.x_min[i], cfg_.x_max[i], cfg_.nodes[i]});
        sgrid_ = StateGrid(axes, cfg_.boundary == "extrapolate" ? BoundaryPolicy::extrapolate : BoundaryPolicy::clamp);
        t1_ = cfg_.end_time(game_.spec.horizon);
        tgrid_ = TimeGrid{cfg_.t0, t1_, cfg_.steps};
        x0_ = to_vec(cfg_.x0);

        summary_.out_dir = resolve_out_dir(cfg_, ov.out_dir);
        fs::create_directories(summary_.out_dir);
        csv_.open(path("summary.csv"), std::ios::binary);
        if (!csv_) throw std::runtime_error("cannot write to output directory " + summary_.out_dir);
        csv_ << kHeader << "\ncheck,status,metric,tolerance,note\n";
        csv_.flush();
    }

    void run(const std::string& sub) {
        log_ << "isaacs-lab " << sub << ": family=" << cfg_.family << " out=" << summary_.out_dir << "\n";
        if (sub == "value" || sub == "all") value();
        if (sub == "pde" || sub == "all") pde();
        if (sub == "agree" || sub == "all") agree();
        if (sub == "certify" || sub == "all") certify();
        if (sub == "oracle" || sub == "all") oracle();
        std::ofstream txt(path("summary.txt"), std::ios::binary);
        txt << kHeader << "\n";
        print_summary_table(summary_, txt);
        print_summary_table(summary_, log_);
    }

    RunSummary summary() const { return summary_; }

private:
    std::string path(const std::string& name) const { return (fs::path(summary_.out_dir) / name).string(); }

    void record(CheckResult r) {
        csv_ << r.id << ',' << (r.passed ? "pass" : "fail") << ',' << fmt(r.metric) << ',' << fmt(r.tolerance)
             << ',' << csv_quote(r.note) << '\n';
        csv_.flush();
        log_ << "  " << (r.passed ? "pass " : "FAIL ") << r.id << "  metric=" << fmt(r.metric)
             << " tol=" << fmt(r.tolerance) << (r.note.empty() ? "" : "  [" + r.note + "]") << "\n";
        summary_.checks.push_back(std::move(r));
    }

    // Runs a block; an exception becomes a failed check carrying the message verbatim.
    void guarded(const std::string& id, double tol, const std::function<void()>& body) {
        try {
            body();
        } catch (const std::exception& ex) {
            record({id, false, NAN, tol, ex.what()});
        }
    }

    void write_field(const ValueField& f, const std::string& stem) {
        {
            std::ofstream os(path(stem + ".csv"), std::ios::binary);
            write_field_csv(f, os);
        }
        if (cfg_.write_binary) {
            std::ofstream os(path(stem + ".vfld"), std::ios::binary);
            write_field_binary(f, os);
        }
    }

    void reference_checks(const std::string& prefix, const ValueField& lower, const ValueField& upper) {
        if (cfg_.reference_lower) {
            const double w = lower.root(x0_);
            record({prefix + ".reference_lower", std::abs(w - *cfg_.reference_lower) <= cfg_.reference_tolerance,
                    std::abs(w - *cfg_.reference_lower), cfg_.reference_tolerance, "W(t0,x0)=" + fmt(w)});
        }
        if (cfg_.reference_upper) {
            const double u = upper.root(x0_);
            record({prefix + ".reference_upper", std::abs(u - *cfg_.reference_upper) <= cfg_.reference_tolerance,
                    std::abs(u - *cfg_.reference_upper), cfg_.reference_tolerance, "U(t0,x0)=" + fmt(u)});
        }
    }

    void value() {
        guarded("value.solve", 0.0, [&] {
            DppDiagnostics dl, du;
            const ValueField W = value_iteration(game_.spec, game_.controls, sgrid_, tgrid_, ValueTag::lower, &dl);
            const ValueField U = value_iteration(game_.spec, game_.controls, sgrid_, tgrid_, ValueTag::upper, &du);
            write_field(W, "value_lower");
            write_field(U, "value_upper");
            log_ << "  DPP W(t0,x0)=" << fmt(W.root(x0_)) << " U(t0,x0)=" << fmt(U.root(x0_)) << "\n";
            record({"value.monotone", dl.min_driver_weight >= 0.0, dl.min_driver_weight, 0.0,
                    "boundary hits " + std::to_string(dl.boundary_hits + du.boundary_hits)});
            const double ord = order_violation(W, U, cfg_.window);
            record({"value.order", ord <= cfg_.order_tolerance, ord, cfg_.order_tolerance, "max W - U"});
            reference_checks("value", W, U);

            for (const ValueField* f : {&W, &U}) {
                const RegularityReport r = regularity_probe(*f, cfg_.window);
                const std::string id = std::string("value.holder_") + to_string(f->tag);
                if (!r.holder_checked) {
                    record({id, true, 0.0, cfg_.holder_min, "no time variation"});
                } else {
                    record({id, r.holder_exponent >= cfg_.holder_min, r.holder_exponent, cfg_.holder_min, ""});
                }
            }
            const StateGrid fine = refine(sgrid_);
            const TimeGrid tfine{tgrid_.t0, tgrid_.t1, 4 * tgrid_.steps};
            for (const ValueField* f : {&W, &U}) {
                const ValueField g = value_iteration(game_.spec, game_.controls, fine, tfine, f->tag);
                const RefinementReport r = lipschitz_refinement({*f, g}, cfg_.window);
                const double growth = r.lipschitz[0] > 0.0 ? r.lipschitz[1] / r.lipschitz[0] : 0.0;
                const bool ok = r.lipschitz[1] <= cfg_.lipschitz_growth * r.lipschitz[0] + 1e-12;
                record({std::string("value.lipschitz_") + to_string(f->tag), ok, growth, cfg_.lipschitz_growth,
                        "ratios " + fmt(r.lipschitz[0]) + " -> " + fmt(r.lipschitz[1])});
            }
        });
    }

    int pde_steps(const StateGrid& grid) const {
        if (cfg_.pde_steps > 0) return cfg_.pde_steps;
        return std::max(cfg_.steps, stable_steps(game_.spec, game_.controls, grid, cfg_.t0, t1_));
    }

    std::vector<Polynomial> probe_family() const {
        Vec lo(sgrid_.dim()), hi(sgrid_.dim());
        for (int i = 0; i < sgrid_.dim(); ++i) {
            const auto& a = sgrid_.axes()[static_cast<std::size_t>(i)];
            const double mid = 0.5 * (a.min + a.max), half = 0.5 * (a.max - a.min) * cfg_.window;
            lo[i] = mid - half;
            hi[i] = mid + half;
        }
        return polynomial_family(sgrid_.dim(), cfg_.probe_count, cfg_.t0, t1_, lo, hi, cfg_.seed);
    }

    void pde() {
        guarded("pde.solve", 0.0, [&] {
            const TimeGrid tg{cfg_.t0, t1_, pde_steps(sgrid_)};
            const ValueField W = solve_isaacs(game_.spec, game_.controls, sgrid_, tg, ValueTag::lower);
            const ValueField U = solve_isaacs(game_.spec, game_.controls, sgrid_, tg, ValueTag::upper);
            write_field(W, "pde_lower");
            write_field(U, "pde_upper");
            log_ << "  PDE steps=" << tg.steps << " W(t0,x0)=" << fmt(W.root(x0_)) << " U(t0,x0)=" << fmt(U.root(x0_))
                 << "\n";
            const double ord = order_violation(W, U, cfg_.window);
            record({"pde.order", ord <= cfg_.order_tolerance, ord, cfg_.order_tolerance, "max W - U"});
            reference_checks("pde", W, U);

            const std::vector<Polynomial> family = probe_family();
            ProbeOptions po;
            po.c_probe = cfg_.probe_c;
            po.window = cfg_.window;
            for (const ValueField* f : {&W, &U}) {
                const ProbeReport r = viscosity_residual_probe(*f, game_.spec, game_.controls, family, po);
                std::ofstream os(path(std::string("probe_") + to_string(f->tag) + ".csv"), std::ios::binary);
                write_probe_csv(r, os);
                record({std::string("pde.viscosity_") + to_string(f->tag), r.violations == 0,
                        static_cast<double>(r.violations), 0.0,
                        std::to_string(r.evaluated) + " evaluated, " + std::to_string(r.skipped) +
                            " skipped, tolerance " + fmt(r.tolerance)});
            }
        });
    }

    void agree() {
        std::ofstream os(path("agree.csv"), std::ios::binary);
        os << kHeader << "\nvalue,h,dt,base,refined,ratio,exact,verdict\n";
        for (ValueTag tag : {ValueTag::lower, ValueTag::upper}) {
            const std::string id = std::string("agree.") + to_string(tag);
            guarded(id, cfg_.agreement_tolerance, [&] {
                const TimeGrid tg{cfg_.t0, t1_, pde_steps(sgrid_)};
                AgreementOptions ao;
                ao.tolerance = cfg_.agreement_tolerance;
                ao.min_ratio = cfg_.agreement_ratio;
                ao.exact_floor = cfg_.exact_floor;
                ao.window = cfg_.window;
                const AgreementReport r = cross_method_agreement(game_.spec, game_.controls, sgrid_, tg, tag, ao);
                os << to_string(tag) << ',' << fmt(sgrid_.step(0)) << ',' << fmt(tg.dt()) << ',' << fmt(r.base) << ','
                   << fmt(r.refined) << ',' << fmt(r.ratio) << ',' << (r.exact ? 1 : 0) << ','
                   << (r.passed ? "pass" : "fail") << '\n';
                os.flush();
                std::string note = "refined " + fmt(r.refined);
                note += r.exact ? ", both under exactness floor" : ", ratio " + fmt(r.ratio);
                record({id, r.passed, r.base, cfg_.agreement_tolerance, note});
            });
        }
    }

    BsdeCampaignSetup campaign_setup(int steps) const {
        BsdeCampaignSetup s;
        s.game = &game_;
        s.t0 = cfg_.t0;
        s.t1 = t1_;
        s.steps = steps;
        s.x_lo = Vec(sgrid_.dim());
        s.x_hi = Vec(sgrid_.dim());
        for (int i = 0; i < sgrid_.dim(); ++i) {
            const auto& a = sgrid_.axes()[static_cast<std::size_t>(i)];
            const double mid = 0.5 * (a.min + a.max), half = 0.5 * (a.max - a.min) * cfg_.window;
            s.x_lo[i] = mid - half;
            s.x_hi[i] = mid + half;
        }
        return s;
    }

    Polynomial certify_phi() const {
        const int n = game_.spec.dim_state;
        if (cfg_.certify_phi == "zero") return Polynomial::zero(n);
        if (cfg_.certify_phi == "time_linear") return Polynomial::time_linear(n, 1.0);
        return Polynomial::squared_norm(n);
    }

    void record_campaign(const std::string& id, const CampaignReport& r, std::vector<CertifyRow>* rows) {
        std::string note = std::to_string(r.instances) + " instances, " + std::to_string(r.failures) + " failures";
        if (!r.note.empty()) note += "; " + r.note;
        record({id, r.passed(), r.worst, r.tolerance, note});
        if (rows) rows->push_back({id, r.instances, 0.0, r.worst, r.tolerance, 0.0, r.passed()});
    }

    void certify() {
        std::vector<CertifyRow> rows;
        const BsdeCampaignSetup setup = campaign_setup(cfg_.bsde_steps);
        const Polynomial phi = certify_phi();
        guarded("certify.rate", cfg_.rate_min_slope, [&] {
            LocalizationInstance base;
            base.spec = &game_.spec;
            base.controls = game_.controls;
            base.phi = phi;
            base.t = cfg_.t0;
            base.x = to_vec(cfg_.certify_x);
            base.delta = std::min(cfg_.certify_deltas.front(), t1_ - cfg_.t0);
            base.steps = cfg_.certify_steps;
            const RateReport r = localization_rate_check(base, cfg_.certify_deltas, cfg_.rate_min_slope);
            for (std::size_t i = 0; i < r.rows.size(); ++i) {
                rows.push_back({"rate_y1_y2", static_cast<int>(i), r.rows[i].delta, r.rows[i].diff12, 0.0, r.slope12,
                                r.passed});
                rows.push_back({"rate_aggregate", static_cast<int>(i), r.rows[i].delta, r.rows[i].aggregate, 0.0,
                                r.slope_aggregate, r.passed});
            }
            record({"certify.rate_y1_y2", r.passed, r.slope12, cfg_.rate_min_slope, r.note});
            record({"certify.rate_aggregate", r.passed, r.slope_aggregate, cfg_.rate_min_slope, r.note});
        });
        guarded("certify.identity", 1e-10, [&] {
            record_campaign("certify.identity",
                            identity_campaign(setup, cfg_.certify_deltas, cfg_.certify_steps, cfg_.identity_instances,
                                              cfg_.seed),
                            &rows);
        });
        guarded("certify.supinf", 1.0, [&] {
            record_campaign("certify.supinf",
                            supinf_campaign(setup, phi, cfg_.certify_deltas, cfg_.supinf_steps, cfg_.supinf_instances,
                                            cfg_.seed, cfg_.budget),
                            &rows);
        });
        guarded("certify.ode_selfcheck", cfg_.ode_tolerance, [&] {
            record_campaign("certify.ode_selfcheck",
                            ode_selfcheck_campaign(setup, phi, cfg_.certify_deltas, cfg_.supinf_steps,
                                                   cfg_.supinf_instances, cfg_.seed, cfg_.ode_tolerance),
                            &rows);
        });
        std::ofstream os(path("certify.csv"), std::ios::binary);
        write_certify_csv(rows, os);
    }

    void oracle() {
        std::ofstream os(path("oracle.csv"), std::ios::binary);
        os << kHeader << "\ncheck,instances,failures,worst,tolerance,verdict\n";
        auto row = [&](const std::string& id, const CampaignReport& r) {
            os << id << ',' << r.instances << ',' << r.failures << ',' << fmt(r.worst) << ',' << fmt(r.tolerance) << ','
               << (r.passed() ? "pass" : "fail") << '\n';
            os.flush();
            record_campaign(id, r, nullptr);
        };
        guarded("oracle.dpp_bruteforce", cfg_.oracle_tolerance, [&] {
            row("oracle.dpp_bruteforce",
                dpp_bruteforce_campaign(cfg_.oracle_instances, cfg_.seed, cfg_.oracle_tolerance, cfg_.budget));
        });
        guarded("oracle.expectation", 1e-12, [&] {
            const TimeGrid tg{cfg_.t0, t1_, cfg_.oracle_steps};
            const ExpectationReport r = expectation_formulation_check(game_.spec, game_.controls, tg, x0_, cfg_.budget);
            CampaignReport c;
            c.name = "expectation";
            c.instances = 1;
            c.failures = r.passed ? 0 : 1;
            c.worst = r.gap;
            c.tolerance = 1e-12 * (1.0 + std::abs(r.brute_force));
            c.note = "brute force " + fmt(r.brute_force) + ", expectation " + fmt(r.expectation);
            row("oracle.expectation", c);
        });
        const BsdeCampaignSetup setup = campaign_setup(cfg_.bsde_steps);
        guarded("oracle.comparison", 1e-10, [&] {
            row("oracle.comparison", comparison_campaign(setup, cfg_.bsde_instances, cfg_.seed));
        });
        guarded("oracle.stability", 0.0, [&] {
            row("oracle.stability", stability_campaign(setup, cfg_.bsde_instances, cfg_.seed));
        });
        guarded("oracle.semigroup", 1e-10, [&] {
            row("oracle.semigroup", semigroup_campaign(setup, cfg_.identity_instances, cfg_.seed));
        });
    }

    ExperimentConfig cfg_;
    std::ostream& log_;
    GameInstance game_;
    StateGrid sgrid_;
    TimeGrid tgrid_;
    double t1_ = 1.0;
    Vec x0_;
    RunSummary summary_;
    std::ofstream csv_;
};

}  // namespace

bool RunSummary::all_passed() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const std::vector<std::string>& experiment_subcommands() {
    static const std::vector<std::string> subs = {"value", "pde", "agree", "certify", "oracle", "all"};
    return subs;
}

std::string resolve_out_dir(const ExperimentConfig& cfg, const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv("ISAACS_LAB_OUT"); env && *env) return env;
    return cfg.out_dir;
}

RunSummary run_experiment(ExperimentConfig cfg, const std::string& subcommand, const RunOverrides& overrides,
                          std::ostream& log) {
    const auto& subs = experiment_subcommands();
    if (std::find(subs.begin(), subs.end(), subcommand) == subs.end())
        throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
    Runner runner(std::move(cfg), overrides, log);
    runner.run(subcommand);
    return runner.summary();
}

void print_games(std::ostream& os) {
    for (const GameFamilyInfo& g : list_games()) {
        os << g.name << "\n  " << g.summary << "\n";
        for (const ParamDoc& p : g.params)
            os << "    " << std::left << std::setw(16) << p.name << " default " << std::setw(8) << p.default_value
               << "  " << p.doc << "\n";
    }
}

void print_summary_table(const RunSummary& summary, std::ostream& os) {
    std::size_t width = 5;
    for (const auto& c : summary.checks) width = std::max(width, c.id.size());
    os << std::left << std::setw(static_cast<int>(width)) << "check" << "  status  " << std::setw(14) << "metric"
       << "tolerance\n";
    for (const auto& c : summary.checks)
        os << std::left << std::setw(static_cast<int>(width)) << c.id << "  " << std::setw(6)
           << (c.passed ? "pass" : "FAIL") << "  " << std::setw(14) << fmt(c.metric) << fmt(c.tolerance) << "\n";
    const auto failed = std::count_if(summary.checks.begin(), summary.checks.end(), [](const auto& c) { return !c.passed; });
    os << summary.checks.size() << " checks, " << failed << " failed\n";
}

}  // namespace isaacs
