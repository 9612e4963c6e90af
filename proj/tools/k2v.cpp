// k2v command line: thin wrappers over the library pipeline functions.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "k2v/k2v.hpp"

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Flags {
    std::string config;
    std::string mock_script;
    std::string endpoint;
    std::string model;
    int max_in_flight = 0;
    std::optional<std::uint64_t> seed;
    std::string corpus;
    std::string kg;
    std::string dataset;
    std::string out;
    std::string domain;
    std::size_t count = 0;
    std::size_t max_chunk_tokens = 0;
    std::string criteria;
    std::string responses;
    std::optional<double> alpha;
    std::string mode;
    std::string train;
    std::string bench;
    std::string n_spec;
    std::string addr;
    std::size_t sample_size = 0;
    std::string review_entities;
    std::string review_relations;
    std::string sheet;
    std::size_t sheet_entities = 200;
    std::size_t sheet_relations = 200;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file; flags override its values");
    cmd->add_option("--mock-script", f.mock_script, "Scripted mock gateway responses (JSON)");
    cmd->add_option("--endpoint", f.endpoint, "Chat-completion endpoint URL for live mode");
    cmd->add_option("--model", f.model, "Model name for live mode");
    cmd->add_option("--max-in-flight", f.max_in_flight, "Concurrent gateway calls");
}

k2v::PipelineConfig resolve(const Flags& f) {
    auto c = f.config.empty() ? k2v::PipelineConfig{} : k2v::load_pipeline_config(f.config);
    if (!f.mock_script.empty()) c.mock_script = f.mock_script;
    if (!f.endpoint.empty()) {
        c.gateway.endpoint_url = f.endpoint;
        c.gateway.mode = k2v::GatewayMode::Live;
        c.mock_script.clear();
    }
    if (!f.model.empty()) c.gateway.model = f.model;
    if (f.max_in_flight > 0) c.gateway.max_in_flight = f.max_in_flight;
    if (f.seed) c.seed = *f.seed;
    if (!f.corpus.empty()) c.corpus_dir = f.corpus;
    if (!f.kg.empty()) c.kg_path = f.kg;
    if (!f.dataset.empty()) c.dataset_path = f.dataset;
    if (!f.domain.empty()) c.domain = f.domain;
    if (f.count > 0) c.count = f.count;
    if (f.max_chunk_tokens > 0) c.max_chunk_tokens = f.max_chunk_tokens;
    if (f.alpha) c.alpha = *f.alpha;
    if (!f.mode.empty()) {
        const auto m = k2v::reward_mode_from_string(f.mode);
        if (!m) throw UsageError("--mode must be full, no_gate, answer_only or reason_only");
        c.mode = *m;
    }
    return c;
}

void require(bool ok, const char* what) {
    if (!ok) throw UsageError(what);
}

std::pair<long long, long long> parse_review(const std::string& s) {
    const auto slash = s.find('/');
    if (slash == std::string::npos) throw UsageError("review counts must look like M/N");
    try {
        return {std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1))};
    } catch (const std::exception&) {
        throw UsageError("review counts must look like M/N");
    }
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content << std::flush;
        return;
    }
    k2v::write_file(out_path, content);
}

k2v::ServiceServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

int run(CLI::App& app, Flags& f) {
    const auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    auto c = resolve(f);
    auto& log = *k2v::logger();

    if (name == "build-kg") {
        require(!c.corpus_dir.empty(), "--corpus is required");
        require(!f.out.empty() || !c.kg_path.empty(), "--out is required");
        const auto gateway = k2v::make_gateway(c);
        const auto built = k2v::build_kg(c.corpus_dir, *gateway, c.max_chunk_tokens);
        emit(f.out.empty() ? c.kg_path.string() : f.out, k2v::serialize(built.kg));
        log.info("knowledge graph: {} entities, {} relations", built.kg.entities.size(), built.kg.relations.size());
    } else if (name == "audit-kg") {
        require(!c.kg_path.empty(), "--kg is required");
        const auto kg = k2v::load_kg(c.kg_path);
        k2v::AuditOptions opt;
        opt.sample_size = f.sample_size;
        opt.seed = c.seed;
        if (!f.review_entities.empty()) opt.entity_review = parse_review(f.review_entities);
        if (!f.review_relations.empty()) opt.relation_review = parse_review(f.review_relations);
        nlohmann::json report;
        if (opt.sample_size > 0) {
            require(!c.corpus_dir.empty(), "--corpus is required with --sample-size");
            const auto chunks = k2v::chunk_documents(k2v::load_corpus(c.corpus_dir), c.max_chunk_tokens);
            const auto gateway = k2v::make_gateway(c);
            report = k2v::audit_kg(kg, opt, &chunks, gateway.get());
        } else {
            report = k2v::audit_kg(kg, opt);
        }
        if (!f.sheet.empty())
            k2v::write_file(f.sheet, k2v::sampling_sheet_jsonl(kg, f.sheet_entities, f.sheet_relations, c.seed));
        emit(f.out, report.dump(2) + "\n");
    } else if (name == "synth-qa") {
        require(!c.kg_path.empty(), "--kg is required");
        require(c.count > 0, "--count must be positive");
        require(!f.out.empty(), "--out is required");
        const auto kg = k2v::load_kg(c.kg_path);
        const auto gateway = k2v::make_gateway(c);
        const auto result = k2v::synth_dataset(kg, {c.count, c.seed, c.domain}, *gateway);
        emit(f.out, k2v::serialize_dataset(result.pairs));
        log.info("{} QA pairs written, {} candidates rejected", result.pairs.size(), result.rejections.size());
    } else if (name == "synth-checklists") {
        require(!c.dataset_path.empty(), "--dataset is required");
        require(!f.out.empty(), "--out is required");
        const auto criteria = k2v::load_general_criteria(f.criteria.empty() ? c.domain : f.criteria);
        const auto pairs = k2v::load_dataset(c.dataset_path);
        const auto gateway = k2v::make_gateway(c);
        const auto result = k2v::synth_checklists(pairs, criteria, *gateway);
        emit(f.out, k2v::serialize_dataset(result.pairs));
        log.info("{} checklists written, {} dropped", result.pairs.size(), result.failures.size());
    } else if (name == "score") {
        require(!c.dataset_path.empty(), "--dataset is required");
        require(!f.responses.empty(), "--responses is required");
        const auto pairs = k2v::load_dataset(c.dataset_path);
        const auto responses = k2v::read_jsonl(f.responses);
        const auto gateway = k2v::make_gateway(c);
        const auto scores = k2v::score_responses(pairs, responses, *gateway, {c.alpha, c.mode, c.judge_retries});
        emit(f.out, k2v::to_jsonl(scores));
    } else if (name == "leakage") {
        require(!f.train.empty() && !f.bench.empty(), "--train and --bench are required");
        require(!f.n_spec.empty(), "--n is required");
        std::vector<std::size_t> ns;
        try {
            ns = k2v::parse_n_list(f.n_spec);
        } catch (const k2v::Error& e) {
            throw UsageError(e.what());
        }
        const auto reports =
            k2v::leakage(k2v::load_dataset(f.train), k2v::bench_from_jsonl(k2v::read_jsonl(f.bench)), ns);
        std::vector<nlohmann::json> rows;
        for (const auto& r : reports) rows.push_back(k2v::to_json(r));
        emit(f.out, k2v::to_jsonl(rows));
    } else if (name == "serve") {
        const auto gateway = k2v::make_gateway(c);
        k2v::RewardService service(*gateway, c.judge_retries);
        k2v::ServiceServer server(service);
        const auto [host, port] = k2v::parse_addr(k2v::resolve_addr(f.addr));
        const int bound = server.bind(host, port);
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        log.info("reward service listening on {}:{} (gateway {})", host, bound, k2v::to_string(gateway->mode()));
        server.serve();
        g_server = nullptr;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"K2V: verifiable QA synthesis from a knowledge graph, checklists and answer-gated rewards"};
    app.require_subcommand(1, 1);
    Flags f;

    auto* build = app.add_subcommand("build-kg", "Chunk a corpus, extract entities/relations and merge them into a KG");
    add_common(build, f);
    build->add_option("--corpus", f.corpus, "Directory of .txt files or a JSON-lines corpus");
    build->add_option("--out", f.out, "Output KG JSON");
    build->add_option("--max-chunk-tokens", f.max_chunk_tokens, "Chunk size in tokens (default 256)");

    auto* audit = app.add_subcommand("audit-kg", "Structural metrics, judged extraction audit and review consistency");
    add_common(audit, f);
    audit->add_option("--kg", f.kg, "KG JSON");
    audit->add_option("--corpus", f.corpus, "Corpus the KG was built from (for --sample-size)");
    audit->add_option("--sample-size", f.sample_size, "Chunks to judge for extraction accuracy");
    audit->add_option("--seed", f.seed, "Sampling seed");
    audit->add_option("--review-entities", f.review_entities, "Manual entity review result as M/N");
    audit->add_option("--review-relations", f.review_relations, "Manual relation review result as M/N");
    audit->add_option("--sheet", f.sheet, "Write a review sampling sheet (JSON lines)");
    audit->add_option("--sheet-entities", f.sheet_entities, "Entities on the sheet");
    audit->add_option("--sheet-relations", f.sheet_relations, "Relations on the sheet");
    audit->add_option("--out", f.out, "Report path (default stdout)");
    audit->add_option("--max-chunk-tokens", f.max_chunk_tokens, "Chunk size used when the KG was built");

    auto* synth = app.add_subcommand("synth-qa", "Sample two-hop paths and turn them into fill-blank questions");
    add_common(synth, f);
    synth->add_option("--kg", f.kg, "KG JSON");
    synth->add_option("--count", f.count, "Number of QA pairs");
    synth->add_option("--seed", f.seed, "Sampling seed");
    synth->add_option("--domain", f.domain, "Domain label for ids and records");
    synth->add_option("--out", f.out, "Output dataset (JSON lines)");

    auto* checklists = app.add_subcommand("synth-checklists", "Instantiate a checklist for every QA pair");
    add_common(checklists, f);
    checklists->add_option("--dataset", f.dataset, "Input dataset (JSON lines)");
    checklists->add_option("--criteria", f.criteria, "Bundled domain (agriculture, medicine, law) or criteria JSON file");
    checklists->add_option("--domain", f.domain, "Domain whose bundled criteria are used when --criteria is absent");
    checklists->add_option("--out", f.out, "Output dataset with checklists");

    auto* score = app.add_subcommand("score", "Score model responses against a dataset");
    add_common(score, f);
    score->add_option("--dataset", f.dataset, "Dataset with checklists (JSON lines)");
    score->add_option("--responses", f.responses, "Responses as JSON lines {\"id\",\"response\"}");
    score->add_option("--alpha", f.alpha, "Answer reward weight (default 6)");
    score->add_option("--mode", f.mode, "full, no_gate, answer_only or reason_only");
    score->add_option("--out", f.out, "Scores (JSON lines, default stdout)");

    auto* leak = app.add_subcommand("leakage", "n-gram contamination check of a bench against training questions");
    add_common(leak, f);
    leak->add_option("--train", f.train, "Training dataset (JSON lines)");
    leak->add_option("--bench", f.bench, "Bench samples as JSON lines {\"id\",\"text\"}");
    leak->add_option("--n", f.n_spec, "n values, e.g. 22,26,30 or 22..30");
    leak->add_option("--out", f.out, "Reports (JSON lines, default stdout)");

    auto* serve = app.add_subcommand("serve", "Run the HTTP reward service");
    add_common(serve, f);
    serve->add_option("--addr", f.addr, "host:port (default 127.0.0.1:8731 or $K2V_ADDR)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }

    try {
        return run(app, f);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
        return 2;
    } catch (const k2v::Error& e) {
        k2v::logger()->error("{}: {}", k2v::to_string(e.code()), e.what());
        return 1;
    } catch (const std::exception& e) {
        k2v::logger()->error("{}", e.what());
        return 1;
    }
}
