#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "hypac/run.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& output_dir) {
    hypac::ExperimentConfig cfg = hypac::load_config(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    hypac::RunManifest man = hypac::run(cfg);
    std::printf("run %s -> %s/manifest.json\n", man.config_hash.c_str(),
                cfg.output_dir.c_str());
    for (const auto& s : man.stages) {
        if (!s.ran) std::printf("  %-10s skipped\n", s.name.c_str());
        else if (s.ok) std::printf("  %-10s ok    %7.2fs\n", s.name.c_str(), s.seconds);
        else std::printf("  %-10s FAILED %s\n", s.name.c_str(), s.error.c_str());
    }
    int failures = 0;
    for (const auto& a : man.audits) {
        const char* verdict = a.skipped ? "skipped" : (a.pass ? "pass" : "FAIL");
        if (!a.pass && !a.skipped) ++failures;
        std::printf("  audit %-22s %s\n", a.name.c_str(), verdict);
    }
    std::printf("%s\n", man.all_pass ? "all enabled audits pass" : "FAILURES present");
    return man.all_pass ? 0 : 1;
}

int cmd_report(const std::string& manifest_path) {
    auto rep = hypac::report(manifest_path);
    std::fputs(rep.text.c_str(), stdout);
    return rep.ok ? 0 : 1;
}

int cmd_audit(const std::string& field_path) {
    auto res = hypac::audit_field_file(field_path);
    std::fputs(res.text.c_str(), stdout);
    std::printf("%s\n", res.ok ? "pass" : "FAIL");
    return res.ok ? 0 : 1;
}

int cmd_certify(const std::string& field_path, const std::string& window_spec) {
    auto res = hypac::certify_field_file(field_path, window_spec);
    std::fputs(res.text.c_str(), stdout);
    std::printf("%s\n", res.ok ? "all windows minimal" : "FAIL");
    return res.ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase interfaces on hyperbolic group balls"};
    app.require_subcommand(1);

    std::string config_path, output_dir, manifest_path, field_path, window_spec;

    auto* run_cmd = app.add_subcommand("run", "execute a config end to end");
    run_cmd->add_option("config", config_path, "experiment config JSON")->required();
    run_cmd->add_option("--output", output_dir, "override the config's output directory");

    auto* report_cmd = app.add_subcommand("report", "summarize a run manifest");
    report_cmd->add_option("manifest", manifest_path, "manifest.json from a run")->required();

    auto* audit_cmd = app.add_subcommand("audit", "recheck a stored field artifact");
    audit_cmd->add_option("field", field_path, "field artifact file")->required();

    auto* certify_cmd = app.add_subcommand("certify", "window-minimality of a field's partition");
    certify_cmd->add_option("field", field_path, "field artifact file")->required();
    certify_cmd->add_option("windows", window_spec, "ball:<m> | sites:<w1;w2;...> | random:<count>:<size>[:seed]")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, output_dir);
        if (report_cmd->parsed()) return cmd_report(manifest_path);
        if (audit_cmd->parsed()) return cmd_audit(field_path);
        if (certify_cmd->parsed()) return cmd_certify(field_path, window_spec);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
