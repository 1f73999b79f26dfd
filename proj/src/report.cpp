#include "fedphish/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "json.hpp"

#include "fedphish/errors.hpp"

namespace fedphish {

namespace {

std::string undefined_list(const Metrics& m) {
    std::string out;
    const auto add = [&](const char* name) {
        if (!out.empty()) out += ';';
        out += name;
    };
    if (!m.accuracy_defined) add("accuracy");
    if (!m.precision_defined) add("precision");
    if (!m.recall_defined) add("recall");
    if (!m.f1_defined) add("f1");
    return out;
}

void csv_metrics(std::ostream& os, const Metrics& m) {
    os << format_double(m.accuracy) << ',' << format_double(m.precision) << ','
       << format_double(m.recall) << ',' << format_double(m.f1) << ',' << m.tp << ',' << m.fp
       << ',' << m.tn << ',' << m.fn << ',' << undefined_list(m);
}

nlohmann::json metrics_json(const Metrics& m) {
    nlohmann::json j;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["tn"] = m.tn;
    j["fn"] = m.fn;
    nlohmann::json undef = nlohmann::json::array();
    if (!m.accuracy_defined) undef.push_back("accuracy");
    if (!m.precision_defined) undef.push_back("precision");
    if (!m.recall_defined) undef.push_back("recall");
    if (!m.f1_defined) undef.push_back("f1");
    j["undefined"] = undef;
    return j;
}

std::string two_decimals(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

void write_csv(std::ostream& os, const RunReport& report) {
    os << "model,strategy,round,stream,active_stream,accuracy,precision,recall,f1,tp,fp,tn,fn,"
          "undefined\n";
    for (const CellResult& cell : report.cells) {
        const std::string model = model_kind_name(cell.model);
        const std::string strategy = strategy_kind_name(cell.strategy);
        for (const RoundRecord& rec : cell.sim.history) {
            for (std::size_t s = 0; s < rec.per_stream.size(); ++s) {
                os << model << ',' << strategy << ',' << rec.round << ',' << (s + 1) << ','
                   << rec.active_stream << ',';
                csv_metrics(os, rec.per_stream[s]);
                os << '\n';
            }
        }
    }
    for (const CellResult& cell : report.cells) {
        os << model_kind_name(cell.model) << ',' << strategy_kind_name(cell.strategy)
           << ",final,union,,";
        csv_metrics(os, cell.sim.final_union);
        os << '\n';
    }
}

void write_json(std::ostream& os, const RunReport& report) {
    nlohmann::json j;
    j["version"] = report.version;
    nlohmann::json cfg;
    cfg["dataset"] = report.config.dataset;
    cfg["synthetic_count"] = report.config.synthetic_count;
    cfg["raw_urls"] = report.config.raw_urls;
    cfg["models"] = report.config.models;
    cfg["strategies"] = report.config.strategies;
    cfg["rounds"] = report.config.rounds;
    cfg["nodes"] = report.config.nodes;
    cfg["streams"] = report.config.streams;
    cfg["local_epochs"] = report.config.local_epochs;
    cfg["batch_size"] = report.config.batch_size;
    cfg["lr"] = report.config.lr;
    cfg["partition"] = report.config.partition;
    cfg["window"] = report.config.window;
    cfg["attn_tokens"] = report.config.attn_tokens;
    cfg["normalize"] = report.config.normalize;
    cfg["seed"] = report.config.seed;
    j["config"] = cfg;

    nlohmann::json cells = nlohmann::json::array();
    for (const CellResult& cell : report.cells) {
        nlohmann::json c;
        c["model"] = model_kind_name(cell.model);
        c["strategy"] = strategy_kind_name(cell.strategy);
        nlohmann::json history = nlohmann::json::array();
        for (const RoundRecord& rec : cell.sim.history) {
            nlohmann::json r;
            r["round"] = rec.round;
            r["active_stream"] = rec.active_stream;
            nlohmann::json streams = nlohmann::json::array();
            for (const Metrics& m : rec.per_stream) streams.push_back(metrics_json(m));
            r["streams"] = streams;
            history.push_back(r);
        }
        c["history"] = history;
        c["final"] = metrics_json(cell.sim.final_union);
        cells.push_back(c);
    }
    j["cells"] = cells;
    os << j.dump(2) << '\n';
}

void write_markdown(std::ostream& os, const RunReport& report) {
    os << "# Federated continual learning results\n\n";
    os << "- dataset: " << report.config.dataset << "\n";
    os << "- rounds: " << report.config.rounds << ", nodes: " << report.config.nodes
       << ", streams: " << report.config.streams << ", local epochs: "
       << report.config.local_epochs << ", batch size: " << report.config.batch_size << "\n";
    os << "- lr: " << format_double(report.config.lr) << ", partition: "
       << report.config.partition << ", window: " << report.config.window << ", seed: "
       << report.config.seed << "\n";

    // Strategies appear in request order; models in the fixed table order.
    std::vector<StrategyKind> strategies;
    for (const CellResult& cell : report.cells) {
        bool seen = false;
        for (StrategyKind s : strategies) seen = seen || s == cell.strategy;
        if (!seen) strategies.push_back(cell.strategy);
    }
    constexpr ModelKind kTableOrder[] = {ModelKind::SimpleMLP, ModelKind::DeepMLP,
                                         ModelKind::SimpleRNN, ModelKind::AttentionClassifier};
    for (StrategyKind strategy : strategies) {
        os << "\n## Results under " << strategy_display_label(strategy) << " Strategy\n\n";
        os << "| Model | Accuracy | Precision | Recall | F1-Score |\n";
        os << "| --- | --- | --- | --- | --- |\n";
        for (ModelKind model : kTableOrder) {
            for (const CellResult& cell : report.cells) {
                if (cell.model != model || cell.strategy != strategy) continue;
                const Metrics& m = cell.sim.final_union;
                os << "| " << model_display_label(model) << " | " << two_decimals(m.accuracy)
                   << " | " << two_decimals(m.precision) << " | " << two_decimals(m.recall)
                   << " | " << two_decimals(m.f1) << " |\n";
            }
        }
    }
}

std::vector<std::string> emit_report(const RunReport& report, const std::string& out_dir,
                                     const std::vector<std::string>& formats) {
    std::vector<std::string> written;
    if (formats.empty()) return written;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());

    const auto emit = [&](const std::string& name, auto writer) {
        const std::string path = (std::filesystem::path(out_dir) / name).string();
        std::ofstream os(path);
        if (!os) throw IoError("cannot open '" + path + "' for writing");
        writer(os);
        if (!os) throw IoError("write to '" + path + "' failed");
        written.push_back(path);
    };

    for (const std::string& fmt : formats) {
        if (fmt == "csv")
            emit("report.csv", [&](std::ostream& os) { write_csv(os, report); });
        else if (fmt == "json")
            emit("report.json", [&](std::ostream& os) { write_json(os, report); });
        else if (fmt == "markdown")
            emit("report.md", [&](std::ostream& os) { write_markdown(os, report); });
        else
            throw ConfigError("unknown report format '" + fmt +
                              "' (expected csv, json, or markdown)");
    }

    // Wall-clock lives apart from the deterministic reports.
    emit("timings.json", [&](std::ostream& os) {
        nlohmann::json j;
        j["total_seconds"] = report.total_wall_seconds;
        nlohmann::json cells = nlohmann::json::array();
        for (const CellResult& cell : report.cells) {
            nlohmann::json c;
            c["model"] = model_kind_name(cell.model);
            c["strategy"] = strategy_kind_name(cell.strategy);
            c["seconds"] = cell.wall_seconds;
            cells.push_back(c);
        }
        j["cells"] = cells;
        os << j.dump(2) << '\n';
    });
    return written;
}

} // namespace fedphish
