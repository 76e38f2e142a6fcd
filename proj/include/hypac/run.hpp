#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hypac/config.hpp"

namespace hypac {

struct StageRecord {
    std::string name;
    double seconds = 0.0;
    bool ok = false;
    bool ran = false;
    std::string error;
};

struct AuditRecord {
    std::string name;
    bool pass = false;
    bool skipped = false;
    json details;
};

struct ArtifactRecord {
    std::string path; // relative to the output directory
    std::string kind;
    std::uint64_t bytes = 0;
    std::string fnv;
};

struct RunManifest {
    std::string config_hash;
    json config;
    std::vector<StageRecord> stages;
    std::vector<ArtifactRecord> artifacts;
    std::vector<AuditRecord> audits;
    bool all_pass = false;
};

inline json manifest_to_json(const RunManifest& m) {
    json j;
    j["config_hash"] = m.config_hash;
    j["config"] = m.config;
    j["stages"] = json::array();
    for (const auto& s : m.stages)
        j["stages"].push_back({{"name", s.name},
                               {"seconds", s.seconds},
                               {"ok", s.ok},
                               {"ran", s.ran},
                               {"error", s.error}});
    j["artifacts"] = json::array();
    for (const auto& a : m.artifacts)
        j["artifacts"].push_back(
            {{"path", a.path}, {"kind", a.kind}, {"bytes", a.bytes}, {"fnv", a.fnv}});
    j["audits"] = json::array();
    for (const auto& a : m.audits)
        j["audits"].push_back(
            {{"name", a.name}, {"pass", a.pass}, {"skipped", a.skipped}, {"details", a.details}});
    j["all_pass"] = m.all_pass;
    return j;
}

inline RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config = j.at("config");
    for (const auto& s : j.at("stages"))
        m.stages.push_back({s.at("name").get<std::string>(), s.at("seconds").get<double>(),
                            s.at("ok").get<bool>(), s.at("ran").get<bool>(),
                            s.at("error").get<std::string>()});
    for (const auto& a : j.at("artifacts"))
        m.artifacts.push_back({a.at("path").get<std::string>(), a.at("kind").get<std::string>(),
                               a.at("bytes").get<std::uint64_t>(), a.at("fnv").get<std::string>()});
    for (const auto& a : j.at("audits"))
        m.audits.push_back({a.at("name").get<std::string>(), a.at("pass").get<bool>(),
                            a.at("skipped").get<bool>(), a.at("details")});
    m.all_pass = j.at("all_pass").get<bool>();
    return m;
}

inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::closed_form: return "closed_form";
        case Provenance::calibrated: return "calibrated";
        default: return "assumed";
    }
}

// Infinite geodesic ray extending a finite prefix: the shortest eventually
// periodic continuation that stays in normal form.
inline BoundaryPoint make_ray(const GroupSpec& spec, const Word& prefix) {
    const int ns = spec.num_generators();
    auto try_period = [&](const Word& period) -> bool {
        Word w = prefix;
        for (int rep = 0; rep < 4; ++rep)
            for (std::uint8_t s : period) {
                if (!spec.plain_append(w, s)) return false;
                w.push_back(s);
            }
        return true;
    };
    for (int s = 0; s < ns; ++s) {
        Word p{static_cast<std::uint8_t>(s)};
        if (try_period(p)) {
            BoundaryPoint bp{prefix, p};
            validate_ray(spec, bp);
            return bp;
        }
    }
    for (int s = 0; s < ns; ++s)
        for (int t = 0; t < ns; ++t) {
            Word p{static_cast<std::uint8_t>(s), static_cast<std::uint8_t>(t)};
            if (try_period(p)) {
                BoundaryPoint bp{prefix, p};
                validate_ray(spec, bp);
                return bp;
            }
        }
    throw std::runtime_error("no periodic continuation found for the given prefix");
}

struct ResolvedSetup {
    ExperimentConfig cfg; // with ball radius and ladder rungs filled in
    Potential pot;
    ContinuationConfig ccfg;
    std::vector<double> ladder; // empty for fixed-coupling runs
    double rho_solve = 0.0;
};

inline ResolvedSetup resolve_setup(ExperimentConfig cfg) {
    validate_config_or_throw(cfg);
    ResolvedSetup rs;
    rs.pot = make_potential(cfg.potential);
    const double well_curv =
        std::min(std::abs(rs.pot.d2V(rs.pot.c0)), std::abs(rs.pot.d2V(rs.pot.c1)));
    rs.ccfg = ContinuationConfig::make(rs.pot, cfg.group.num_generators(), cfg.contraction_k,
                                       well_curv);
    if (cfg.rho.ladder) {
        rs.ladder = cfg.rho.rungs.empty() ? default_ladder(rs.ccfg.rho1, cfg.rho.depth)
                                          : cfg.rho.rungs;
        cfg.rho.rungs = rs.ladder;
        rs.rho_solve = rs.ladder.back();
    } else {
        rs.rho_solve = cfg.rho.fixed_value;
    }
    if (cfg.ball_radius == 0) cfg.ball_radius = cfg.radii.back() + 1;
    rs.cfg = std::move(cfg);
    return rs;
}

namespace detail {

class StageClock {
public:
    StageClock() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

} // namespace detail

// Executes the full pipeline for one config. Stage failures abort the rest
// of the pipeline but still emit the manifest collected so far; audit
// failures are recorded and do not abort. Field artifacts carry no
// timestamps, so reruns of one config are byte-identical.
inline RunManifest run(const ExperimentConfig& user_cfg) {
    namespace fs = std::filesystem;
    ResolvedSetup rs = resolve_setup(user_cfg);
    const ExperimentConfig& cfg = rs.cfg;
    const Potential& pot = rs.pot;
    const ContinuationConfig& ccfg = rs.ccfg;

    RunManifest man;
    man.config = config_to_json(cfg);
    man.config_hash = config_hash(cfg);
    fs::create_directories(cfg.output_dir);

    auto emit = [&](const std::string& rel, const std::string& kind, const std::string& raw) {
        ArtifactRecord a;
        a.path = rel;
        a.kind = kind;
        a.bytes = raw.size();
        a.fnv = hex64(fnv1a64(raw.data(), raw.size()));
        man.artifacts.push_back(a);
    };
    auto emit_text = [&](const std::string& rel, const std::string& kind, const std::string& raw) {
        write_text_file((fs::path(cfg.output_dir) / rel).string(), raw);
        emit(rel, kind, raw);
    };
    auto emit_field = [&](const std::string& rel, const ScalarField& f, json extra) {
        const std::string path = (fs::path(cfg.output_dir) / rel).string();
        write_field(path, f, std::move(extra));
        emit(rel, "field", read_text_file(path));
    };

    emit_text("config.json", "config", man.config.dump(2) + "\n");

    bool aborted = false;
    auto stage = [&](const std::string& name, auto&& body) {
        StageRecord rec;
        rec.name = name;
        if (aborted) {
            man.stages.push_back(rec);
            return;
        }
        rec.ran = true;
        detail::StageClock clock;
        try {
            body();
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.error = e.what();
            aborted = true;
        }
        rec.seconds = clock.seconds();
        man.stages.push_back(rec);
    };
    auto audit = [&](const std::string& name, auto&& body) {
        if (!cfg.audit_enabled(name)) return;
        AuditRecord rec;
        rec.name = name;
        try {
            body(rec);
        } catch (const std::exception& e) {
            rec.pass = false;
            rec.details["error"] = e.what();
        }
        man.audits.push_back(std::move(rec));
    };

    Rng rng(cfg.seed);
    std::unique_ptr<CayleyBall> ball;
    std::optional<BoundarySpecSet> u;
    std::optional<ConstantsReport> constants;
    std::optional<SolveSequenceResult> seq;
    std::optional<PhasePartition> phases;
    std::optional<RhoSweepResult> sweep;
    const double h = cfg.group.entropy_exact();
    const double eps = cfg.epsilon.value_or(h / 2.0);
    json extras = {{"config_hash", man.config_hash},
                   {"boundary", cfg.boundary},
                   {"potential", cfg.potential},
                   {"sigma0", ccfg.sigma0},
                   {"contraction_k", cfg.contraction_k}};

    stage("ball", [&] {
        ball = std::make_unique<CayleyBall>(cfg.group, cfg.ball_radius);
        audit("growth", [&](AuditRecord& rec) {
            auto est = entropy_estimate(*ball);
            auto formula = cfg.group.sphere_counts(ball->radius());
            bool match = true;
            json counts = json::array();
            for (int m = 0; m <= ball->radius(); ++m) {
                counts.push_back({{"n", m},
                                  {"bfs", ball->sphere_count(m)},
                                  {"formula", formula[static_cast<std::size_t>(m)]}});
                if (ball->sphere_count(m) != formula[static_cast<std::size_t>(m)]) match = false;
            }
            rec.pass = match;
            rec.details = {{"spheres", counts},
                           {"entropy_exact", est.exact},
                           {"entropy_slope", est.slope}};
        });
    });

    stage("geometry", [&] {
        std::vector<Cylinder> cyls;
        for (const auto& w : cfg.boundary) cyls.push_back(Cylinder{cfg.group.parse_word(w)});
        u = BoundarySpecSet::normalize(cfg.group, std::move(cyls));
        audit("isoperimetric", [&](AuditRecord& rec) {
            auto iso = isoperimetric_audit(*ball, rng, cfg.windows.random_count);
            rec.pass = std::isfinite(iso.k0_observed) && iso.k0_observed > 0.0;
            rec.details = {{"k0_observed", iso.k0_observed},
                           {"k0_calibrated", iso.k0_calibrated},
                           {"samples", iso.samples}};
        });
        audit("cone_growth", [&](AuditRecord& rec) {
            if (ball->radius() < 6) {
                rec.skipped = true;
                rec.pass = true;
                rec.details["note"] = "ball radius below 6";
                return;
            }
            auto cg = cone_growth_audit(*ball, *u, eps, h / eps);
            rec.pass = !cg.emptied && cg.envelope_lo > 0.0 && std::isfinite(cg.envelope_hi);
            rec.details = {{"slope", cg.slope},
                           {"envelope_lo", cg.envelope_lo},
                           {"envelope_hi", cg.envelope_hi},
                           {"first_depth", cg.first_depth},
                           {"sphere_counts", cg.sphere_counts}};
        });
        audit("constants", [&](AuditRecord& rec) {
            constants = compute_constants_report(*ball, rng, cfg.epsilon);
            json table = json::array();
            auto row = [&](const char* n, const ReportedConstant& c) {
                table.push_back({{"name", n},
                                 {"value", c.value},
                                 {"provenance", provenance_name(c.provenance)},
                                 {"note", c.note}});
            };
            row("lambda", constants->lambda);
            row("C1", constants->C1);
            row("C2", constants->C2);
            row("C3", constants->C3);
            row("C4", constants->C4);
            row("C5", constants->C5);
            row("Ctilde", constants->Ctilde);
            row("k0", constants->k0);
            row("k1", constants->k1);
            rec.pass = true;
            rec.details = {{"h", constants->h},
                           {"epsilon", constants->epsilon},
                           {"D", constants->D},
                           {"delta", constants->delta},
                           {"delta_tilde", constants->delta_tilde},
                           {"R", constants->R},
                           {"table", table}};
        });
        if (!constants) constants = compute_constants_report(*ball, rng, cfg.epsilon);
    });

    stage("solve", [&] {
        DirichletProblem prob(cfg.group, *u, rs.rho_solve, cfg.radii, ccfg);
        seq = solve_sequence(prob, *ball, pot);
        const int region = cfg.radii.back();
        for (const auto& e : seq->entries) {
            json ex = extras;
            ex["region"] = e.N;
            emit_field("field-N" + std::to_string(e.N) + ".acf", e.field, ex);
        }
        // The phase-geometry facts audited below are minimiser statements:
        // a continued branch can mislabel boundary-layer sites, so audit the
        // energy minimizer, which coordinate descent reaches from the
        // two-level seed.
        ScalarField xmin = anti_continuum_seed(*ball, *u, pot);
        xmin.rho = rs.rho_solve;
        xmin.frozen = inner_set(*ball, ball_subset(*ball, region)).complement();
        SolveOptions sopt;
        sopt.tol = cfg.solve_tol;
        solve_dirichlet(xmin, pot, sopt);
        {
            json ex = extras;
            ex["region"] = region;
            emit_field("minimal-N" + std::to_string(region) + ".acf", xmin, ex);
        }
        const ScalarField& x = xmin;
        phases = classify_phases(x, pot, ccfg.sigma0);

        audit("probe", [&](AuditRecord& rec) {
            auto pr = probe_local_min(x, pot, 1e-6, 64, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
            rec.pass = pr.passed;
            rec.details = {{"worst_coordinate_gain", pr.worst_coordinate_gain},
                           {"worst_random_gain", pr.worst_random_gain}};
        });
        audit("hull", [&](AuditRecord& rec) {
            auto hc = hull_check(x, x.free_sites());
            rec.pass = hc.inside;
            rec.details = {{"lo_data", hc.lo_data},
                           {"hi_data", hc.hi_data},
                           {"lo_field", hc.lo_field},
                           {"hi_field", hc.hi_field}};
        });
        audit("range", [&](AuditRecord& rec) {
            double lo = pot.c1, hi = pot.c0;
            for (double v : x.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            rec.pass = lo >= pot.c0 - 1e-9 && hi <= pot.c1 + 1e-9;
            rec.details = {{"min", lo}, {"max", hi}, {"c0", pot.c0}, {"c1", pot.c1}};
        });
        audit("minmax", [&](AuditRecord& rec) {
            if (seq->entries.size() < 2) {
                rec.skipped = true;
                rec.pass = true;
                rec.details["note"] = "needs two solve regions";
                return;
            }
            const auto& a = seq->entries[seq->entries.size() - 2];
            const auto& b = seq->entries.back();
            Bitset sites = inner_set(*ball, ball_subset(*ball, a.N));
            double slack = minmax_check(a.field, b.field, sites, pot, RimPolicy::clip);
            rec.pass = slack >= -1e-9;
            rec.details = {{"slack", slack}, {"sites", sites.count()}};
        });
        audit("components", [&](AuditRecord& rec) {
            auto ca = connected_components_audit(x, pot, ccfg.sigma0, region);
            rec.pass = ca.passed;
            rec.details = {{"components", ca.components}, {"island_size", ca.island.size()}};
        });
        audit("quasi_minimality", [&](AuditRecord& rec) {
            auto qs = quasi_minimality_sweep(*ball, phases->phase1, rng, cfg.quasi_windows);
            rec.pass = qs.violations == 0;
            rec.details = {{"min_slack", qs.min_slack},
                           {"samples", qs.samples},
                           {"violations", qs.violations}};
        });
        audit("transition", [&](AuditRecord& rec) {
            auto ts = extract_transition_set(x, pot, ccfg.sigma0, region);
            bool symmetric = true;
            json cuts = json::array();
            for (int m = 1; m < region; ++m) {
                CutWindow w = make_window(*ball, ball_subset(*ball, m));
                std::uint64_t b0 = edge_cut(*ball, phases->phase0, w);
                std::uint64_t b1 = edge_cut(*ball, phases->phase0.complement(), w);
                cuts.push_back({{"m", m}, {"b_D0", b0}, {"b_D1", b1}});
                if (b0 != b1) symmetric = false;
            }
            rec.pass = symmetric;
            rec.details = {{"sites", ts.sites.count()},
                           {"edges", ts.edges.size()},
                           {"distance_to_id", ts.distance_to_id},
                           {"window_cuts", cuts}};
        });
        audit("decay", [&](AuditRecord& rec) {
            auto dr = asymptotic_value_audit(x, pot, *u, cfg.contraction_k, region);
            json series = json::array();
            for (const auto& s : dr.series) {
                series.push_back({{"prefix", cfg.group.format_word(s.prefix)},
                                  {"target", s.target},
                                  {"depths", s.depths},
                                  {"max_dev", s.max_dev},
                                  {"monotone", s.monotone},
                                  {"fitted_rate", s.fitted_rate}});
            }
            rec.pass = dr.all_monotone && dr.rates_ok;
            rec.details = {{"series", series},
                           {"worst_rate", dr.worst_rate},
                           {"rate_bound", dr.rate_bound}};
        });
        audit("cascade", [&](AuditRecord& rec) {
            auto mlc = compute_main_lemma_constants(cfg.group, *constants, cfg.boundary_ball_r,
                                                    static_cast<std::size_t>(cfg.cascade_levels));
            BoundaryPoint xi0 = make_ray(cfg.group, u->cylinders().front().prefix);
            auto ca = cascade_audit(*ball, phases->phase1, region, xi0, mlc);
            json levels = json::array();
            for (const auto& l : ca.levels)
                levels.push_back({{"i", l.i},
                                  {"n_i", l.n_i},
                                  {"threshold", l.threshold},
                                  {"cone_count", l.cone_count},
                                  {"triggered", l.triggered},
                                  {"conclusion_holds", l.conclusion_holds}});
            rec.pass = ca.all_conclusions_hold;
            rec.details = {{"levels", levels},
                           {"any_triggered", ca.any_triggered},
                           {"k", mlc.k},
                           {"L0", mlc.L0},
                           {"n1", mlc.n1}};
        });
    });

    stage("plateau", [&] {
        if (!cfg.rho.ladder) return; // fixed-coupling runs have no ladder to sweep
        const int region = cfg.radii.back();
        DirichletProblem prob(cfg.group, *u, rs.ladder.front(), cfg.radii, ccfg);
        const double c_cmp = ball_comparison_constant(cfg.group);
        sweep = rho_sweep_report(prob, *ball, pot, rs.ladder, cfg.stabilization_radius, h, c_cmp);
        {
            json ex = extras;
            ex["region"] = region;
            ex["rho_ladder"] = rs.ladder;
            emit_field("plateau-final.acf", sweep->final_field, ex);
        }
        const PlateauPartition& part = sweep->partition;

        audit("plateau", [&](AuditRecord& rec) {
            json rungs = json::array();
            for (const auto& r : part.ladder)
                rungs.push_back({{"rho", r.rho},
                                 {"sigma", r.sigma},
                                 {"condition_lhs", r.condition_lhs},
                                 {"condition_rhs", r.condition_rhs},
                                 {"condition_ok", r.condition_ok},
                                 {"sweeps", r.sweeps},
                                 {"final_residual", r.final_residual}});
            rec.pass = sweep->conditions_ok && sweep->stabilized && sweep->middle_band.empty();
            rec.details = {{"rungs", rungs},
                           {"stabilized", sweep->stabilized},
                           {"middle_band", sweep->middle_band.size()},
                           {"D0_count", part.D0_sites.count()},
                           {"D1_count", part.D1_sites.count()},
                           {"T_edges", part.T_edges.size()},
                           {"comparison_constant", c_cmp}};
        });
        audit("separation", [&](AuditRecord& rec) {
            auto sa = separation_audit(*ball, part, *u, rng, cfg.separation_pairs,
                                       std::max(2, region - 2));
            rec.pass = sa.passed;
            rec.details = {{"pairs", sa.pairs_checked},
                           {"geodesics", sa.geodesics_checked},
                           {"max_crossings", sa.max_crossings},
                           {"failures", sa.failures.size()}};
            if (sa.pairs_checked == 0) rec.details["note"] = "no deep pair available; vacuous";
        });
        audit("infinite_components", [&](AuditRecord& rec) {
            auto ia = infinite_components_audit(part);
            rec.pass = ia.passed;
            rec.details = {{"components", ia.components}, {"island_size", ia.island.size()}};
        });
        audit("certify", [&](AuditRecord& rec) {
            json rows = json::array();
            bool all_ok = true;
            auto consider = [&](const std::string& label, const Bitset& omega) {
                CutWindow w = make_window(*ball, omega);
                auto res = plateau_certify(*ball, part.D0_sites, w, CertifyMode::both, 16);
                bool ok = res.minimal && (!res.ran_exhaustive || !res.ran_oracle || res.modes_agree);
                all_ok = all_ok && ok;
                rows.push_back({{"window", label},
                                {"omega", omega.count()},
                                {"b", res.b_value},
                                {"min", res.min_value},
                                {"minimal", res.minimal},
                                {"exhaustive", res.ran_exhaustive},
                                {"oracle", res.ran_oracle},
                                {"modes_agree", res.modes_agree}});
            };
            for (int m = 1; m <= std::min(cfg.windows.max_ball, region); ++m)
                consider("ball:" + std::to_string(m), ball_subset(*ball, m));
            const std::uint32_t limit = ball->sphere_end(region - 1);
            for (int i = 0; i < cfg.windows.random_count; ++i) {
                std::uint32_t seed = static_cast<std::uint32_t>(rng.uniform_index(limit));
                Bitset omega = random_connected_subset(
                    *ball, rng, seed, static_cast<std::size_t>(cfg.windows.target_size), limit);
                consider("random:" + std::to_string(i), omega);
            }
            rec.pass = all_ok;
            rec.details = {{"windows", rows}};
        });
        audit("bridge", [&](AuditRecord& rec) {
            json rows = json::array();
            bool all_ok = true;
            std::size_t applicable = 0;
            for (int m = 1; m <= std::min(cfg.windows.max_ball, region); ++m) {
                CutWindow w = make_window(*ball, ball_subset(*ball, m));
                auto bc = bridge_check(*ball, part.D0_sites, w, pot, rs.ladder.back());
                rows.push_back({{"m", m},
                                {"applicable", bc.applicable},
                                {"cut", bc.cut},
                                {"action", bc.action_value},
                                {"predicted", bc.predicted},
                                {"relative_error", bc.relative_error}});
                if (!bc.applicable) continue;
                ++applicable;
                if (bc.relative_error > cfg.bridge_tol) all_ok = false;
            }
            rec.pass = all_ok;
            rec.details = {{"windows", rows}, {"applicable", applicable}};
            if (applicable == 0) rec.details["note"] = "no window contains its full cut; vacuous";
        });
    });

    man.all_pass = !aborted;
    for (const auto& s : man.stages) man.all_pass = man.all_pass && (!s.ran || s.ok);
    for (const auto& a : man.audits) man.all_pass = man.all_pass && (a.pass || a.skipped);

    const std::string mdump = manifest_to_json(man).dump(2) + "\n";
    write_text_file((fs::path(cfg.output_dir) / "manifest.json").string(), mdump);
    return man;
}

// ---------------------------------------------------------------------------
// Report: human-readable summary plus CSV extracts from a manifest.

struct ReportResult {
    std::string text;
    std::vector<std::string> csv_files;
    std::vector<std::string> missing; // absent or corrupted artifacts
    bool ok = false;
};

inline const AuditRecord* find_audit(const std::vector<AuditRecord>& audits,
                                     const std::string& name) {
    for (const auto& a : audits)
        if (a.name == name) return &a;
    return nullptr;
}

inline ReportResult report(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    ReportResult out;
    RunManifest man = manifest_from_json(json::parse(read_text_file(manifest_path)));
    const fs::path dir = fs::path(manifest_path).parent_path();
    std::ostringstream text;

    text << "run " << man.config_hash << (man.all_pass ? "  [all audits pass]" : "  [FAILURES]")
         << "\n\nstages:\n";
    for (const auto& s : man.stages) {
        text << "  " << s.name << ": ";
        if (!s.ran) text << "skipped\n";
        else if (s.ok) text << "ok (" << s.seconds << "s)\n";
        else text << "FAILED: " << s.error << "\n";
    }

    text << "\nartifacts:\n";
    for (const auto& a : man.artifacts) {
        const fs::path p = dir / a.path;
        std::string status = "ok";
        if (!fs::exists(p)) {
            status = "MISSING";
            out.missing.push_back(a.path);
        } else {
            const std::string raw = read_text_file(p.string());
            if (hex64(fnv1a64(raw.data(), raw.size())) != a.fnv) {
                status = "CORRUPTED";
                out.missing.push_back(a.path);
            } else if (a.kind == "field") {
                try {
                    load_field(p.string());
                } catch (const std::exception& e) {
                    status = std::string("CORRUPTED: ") + e.what();
                    out.missing.push_back(a.path);
                }
            }
        }
        text << "  " << a.path << " (" << a.kind << ", " << a.bytes << " bytes): " << status
             << "\n";
    }

    auto write_csv = [&](const std::string& name, const std::vector<std::string>& header,
                         const json& rows, auto&& cells) {
        const std::string path = (dir / name).string();
        CsvWriter csv(path, header);
        for (const auto& r : rows) csv.row(cells(r));
        out.csv_files.push_back(path);
    };

    text << "\naudits:\n";
    for (const auto& a : man.audits)
        text << "  " << a.name << ": "
             << (a.skipped ? "skipped" : (a.pass ? "pass" : "FAIL")) << "\n";
    if (!find_audit(man.audits, "plateau")) text << "  plateau: skipped\n";

    if (const auto* g = find_audit(man.audits, "growth"); g && g->details.contains("spheres"))
        write_csv("growth.csv", {"n", "bfs", "formula"}, g->details["spheres"], [](const json& r) {
            return std::vector<std::string>{r.at("n").dump(), r.at("bfs").dump(),
                                            r.at("formula").dump()};
        });
    if (const auto* c = find_audit(man.audits, "constants"); c && c->details.contains("table"))
        write_csv("constants.csv", {"name", "value", "provenance", "note"}, c->details["table"],
                  [](const json& r) {
                      return std::vector<std::string>{
                          r.at("name").get<std::string>(), csv_num(r.at("value").get<double>()),
                          r.at("provenance").get<std::string>(), r.at("note").get<std::string>()};
                  });
    if (const auto* d = find_audit(man.audits, "decay"); d && d->details.contains("series")) {
        const std::string path = (dir / "decay.csv").string();
        CsvWriter csv(path, {"prefix", "target", "depth", "max_dev"});
        for (const auto& s : d->details["series"]) {
            const auto& depths = s.at("depths");
            const auto& devs = s.at("max_dev");
            for (std::size_t i = 0; i < depths.size(); ++i)
                csv.row({s.at("prefix").get<std::string>(), csv_num(s.at("target").get<double>()),
                         depths[i].dump(), csv_num(devs[i].get<double>())});
        }
        out.csv_files.push_back(path);
    }
    if (const auto* ce = find_audit(man.audits, "certify"); ce && ce->details.contains("windows"))
        write_csv("certify.csv", {"window", "omega", "b", "min", "minimal"},
                  ce->details["windows"], [](const json& r) {
                      return std::vector<std::string>{r.at("window").get<std::string>(),
                                                      r.at("omega").dump(), r.at("b").dump(),
                                                      r.at("min").dump(),
                                                      r.at("minimal").get<bool>() ? "1" : "0"};
                  });

    text << "\ncsv: ";
    for (const auto& f : out.csv_files) text << fs::path(f).filename().string() << " ";
    text << "\n";
    out.ok = out.missing.empty();
    out.text = text.str();
    return out;
}

// ---------------------------------------------------------------------------
// Audit: recheck a stored field artifact from scratch.

struct FieldAuditResult {
    std::string text;
    bool ok = false;
};

inline FieldAuditResult audit_field_file(const std::string& path) {
    FieldAuditResult out;
    FieldArtifact art = load_field(path); // throws on checksum mismatch
    const json& hdr = art.header;
    Potential pot = make_potential(hdr.value("potential", std::string("quartic")));
    std::ostringstream text;
    text << "field " << path << "\n  group " << art.ball->spec().describe() << ", radius "
         << art.ball->radius() << ", rho " << art.field.rho << "\n";

    double res = sup_residual(art.field, pot, art.field.free_sites());
    bool res_ok = res <= 1e-6;
    text << "  residual sup: " << res << (res_ok ? " (ok)" : " (FAIL)") << "\n";

    double lo = pot.c1, hi = pot.c0;
    for (double v : art.field.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    bool range_ok = lo >= pot.c0 - 1e-9 && hi <= pot.c1 + 1e-9;
    text << "  range: [" << lo << ", " << hi << "]" << (range_ok ? " (ok)" : " (FAIL)") << "\n";

    auto hc = hull_check(art.field, art.field.free_sites());
    text << "  hull: field [" << hc.lo_field << ", " << hc.hi_field << "] within data ["
         << hc.lo_data << ", " << hc.hi_data << "]" << (hc.inside ? " (ok)" : " (FAIL)") << "\n";

    if (hdr.contains("sigma0")) {
        auto phases = classify_phases(art.field, pot, hdr["sigma0"].get<double>());
        text << "  phases: " << phases.phase0.count() << " low / " << phases.phase1.count()
             << " high, " << phases.violations.size()
             << " middle-band, band deviation " << phases.max_band_deviation << "\n";
    }
    out.ok = res_ok && range_ok && hc.inside;
    out.text = text.str();
    return out;
}

// ---------------------------------------------------------------------------
// Certify: window minimality for a stored field's phase partition.

struct CertifyVerbResult {
    std::string text;
    bool ok = false;
};

inline CertifyVerbResult certify_field_file(const std::string& path,
                                            const std::string& window_spec) {
    CertifyVerbResult out;
    FieldArtifact art = load_field(path);
    const CayleyBall& ball = *art.ball;
    Potential pot = make_potential(art.header.value("potential", std::string("quartic")));
    const double sigma0 = art.header.value("sigma0", 1.0 / 24.0);
    auto phases = classify_phases(art.field, pot, sigma0);
    if (!phases.violations.empty())
        throw std::runtime_error("field has middle-band values; no two-phase partition to certify");

    std::vector<std::pair<std::string, Bitset>> windows;
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::istringstream is(s);
        std::string tok;
        while (std::getline(is, tok, sep)) parts.push_back(tok);
        return parts;
    };
    auto parts = split(window_spec, ':');
    const int region = art.header.value("region", ball.radius() - 1);
    if (parts.empty()) throw std::invalid_argument("empty window spec");
    if (parts[0] == "ball") {
        if (parts.size() != 2) throw std::invalid_argument("window spec: ball:<m>");
        int m = std::stoi(parts[1]);
        if (m < 1 || m > region) throw std::invalid_argument("window radius out of range");
        windows.emplace_back(window_spec, ball_subset(ball, m));
    } else if (parts[0] == "sites") {
        if (parts.size() != 2) throw std::invalid_argument("window spec: sites:<w1;w2;...>");
        Bitset omega(ball.size());
        for (const auto& wtxt : split(parts[1], ';')) {
            std::uint32_t g = ball.find(ball.spec().parse_word(wtxt));
            if (g == kExternal) throw std::invalid_argument("site outside the ball: " + wtxt);
            omega.set(g);
        }
        windows.emplace_back(window_spec, omega);
    } else if (parts[0] == "random") {
        if (parts.size() < 3) throw std::invalid_argument("window spec: random:<count>:<size>[:seed]");
        int count = std::stoi(parts[1]);
        std::size_t size = static_cast<std::size_t>(std::stoul(parts[2]));
        Rng rng(parts.size() > 3 ? std::stoull(parts[3]) : 7ULL);
        const std::uint32_t limit = ball.sphere_end(region - 1);
        for (int i = 0; i < count; ++i) {
            std::uint32_t seed = static_cast<std::uint32_t>(rng.uniform_index(limit));
            windows.emplace_back("random:" + std::to_string(i),
                                 random_connected_subset(ball, rng, seed, size, limit));
        }
    } else {
        throw std::invalid_argument("window spec kinds: ball | sites | random");
    }

    std::ostringstream text;
    bool all_ok = true;
    for (auto& [label, omega] : windows) {
        CutWindow w = make_window(ball, omega);
        auto res = plateau_certify(ball, phases.phase0, w, CertifyMode::both, 16);
        bool ok = res.minimal && (!res.ran_exhaustive || !res.ran_oracle || res.modes_agree);
        all_ok = all_ok && ok;
        text << "  " << label << ": omega " << omega.count() << ", b " << res.b_value << ", min "
             << res.min_value << (res.minimal ? " (minimal" : " (NOT minimal");
        if (res.ran_exhaustive && res.ran_oracle)
            text << (res.modes_agree ? ", modes agree)" : ", MODES DISAGREE)");
        else
            text << (res.ran_exhaustive ? ", exhaustive)" : ", oracle)");
        text << "\n";
    }
    out.ok = all_ok;
    out.text = text.str();
    return out;
}

} // namespace hypac
