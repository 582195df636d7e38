#include "lwinnn/cli/commands.hpp"

#include "lwinnn/bank_io.hpp"
#include "lwinnn/binary_io.hpp"
#include "lwinnn/errors.hpp"
#include "lwinnn/manifest.hpp"
#include "lwinnn/metrics.hpp"
#include "lwinnn/parallel.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace lwinnn::cli {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kScoreGroup = 16;
constexpr std::string_view kIndexHeader = "# lwinnn scores v1";

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, const char* spec = "%.9g") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string sanitize(std::string_view id) {
    std::string s;
    for (char ch : id) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                        ch == '-' || ch == '_' || ch == '.';
        s.push_back(ok ? ch : '_');
    }
    return s.empty() ? "image" : s;
}

std::vector<std::string> split_on(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

bool report_violations(const DatasetManifest& manifest, const std::filesystem::path& path, std::ostream& err) {
    const auto violations = validate_manifest(manifest);
    if (violations.empty()) {
        return true;
    }
    err << "manifest " << path.string() << " has " << violations.size() << " violation(s):\n";
    for (const auto& v : violations) {
        err << "  - " << describe(v) << '\n';
    }
    return false;
}

std::vector<EmbeddingTensor> load_embeddings(std::span<const ManifestEntry> entries, const EmbeddingConfig& cfg,
                                             std::size_t threads) {
    std::vector<EmbeddingTensor> out(entries.size());
    parallel_for(entries.size(), threads,
                 [&](std::size_t i) { out[i] = build_embedding(read_bundle(entries[i].bundle_path), cfg); });
    return out;
}

struct ImageOutput {
    PatchScoreMap patch;
    PixelAnomalyMap pixel;
    float score = 0.0f;
};

std::vector<ImageOutput> score_embeddings(std::span<const EmbeddingTensor> tests, const EmbeddingBank& bank,
                                          const RunConfig& cfg) {
    SearchConfig search = cfg.search;
    search.threads = cfg.threads;
    auto patch_maps = score_patches_batch(tests, bank, search);
    std::vector<ImageOutput> out(tests.size());
    parallel_for(tests.size(), cfg.threads, [&](std::size_t i) {
        const EmbeddingTensor& t = tests[i];
        ImageOutput& o = out[i];
        o.patch = std::move(patch_maps[i]);
        o.pixel = gaussian_blur(upsample_scores(o.patch, t.original_height, t.original_width), cfg.blur_sigma);
        if (cfg.aggregation == Aggregation::knn_image) {
            o.score = image_score_knn(t, bank, cfg.knn_k).score;
        } else if (cfg.max_after_blur) {
            o.score = image_score_max(PatchScoreMap{t.image_id, o.pixel.pixels}).score;
        } else {
            o.score = image_score_max(o.patch).score;
        }
    });
    return out;
}

std::vector<ManifestEntry> limit_entries(const DatasetManifest& m, std::size_t max_samples) {
    std::vector<ManifestEntry> entries = m.entries;
    if (max_samples > 0 && entries.size() > max_samples) {
        entries.resize(max_samples);
    }
    return entries;
}

} // namespace

std::vector<ScoreRow> read_scores_index(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open scores index " + path.string());
    }
    std::vector<ScoreRow> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            if (line.rfind("image_id\t", 0) == 0) {
                continue;
            }
        }
        const auto f = split_on(line, '\t');
        if (f.size() != 5) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 5 tab-separated fields");
        }
        ScoreRow r;
        r.image_id = f[0];
        r.score = std::strtof(f[1].c_str(), nullptr);
        r.label = parse_label(f[2]);
        r.map_path = f[3];
        if (!f[4].empty()) {
            r.mask_path = f[4];
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_scores_index(const std::vector<ScoreRow>& rows, const std::filesystem::path& path) {
    binio::write_atomically(path, [&](std::ostream& out) {
        out << kIndexHeader << '\n' << "image_id\tscore\tlabel\tmap_path\tmask_path\n";
        for (const auto& r : rows) {
            out << r.image_id << '\t' << fmt(r.score) << '\t' << to_string(r.label) << '\t'
                << r.map_path.generic_string() << '\t' << (r.mask_path ? r.mask_path->generic_string() : "")
                << '\n';
        }
    });
}

int cmd_fit(const FitOptions& opts, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    cfg.validate();
    const auto start = Clock::now();
    const DatasetManifest manifest = read_manifest(opts.train_manifest, Split::train, cfg.category);
    if (!report_violations(manifest, opts.train_manifest, err)) {
        return kExitManifest;
    }

    const std::string fingerprint = cfg.embedding.fingerprint();
    if (std::filesystem::exists(opts.bank) && !opts.force) {
        std::string existing;
        try {
            existing = read_bank_fingerprint(opts.bank);
        } catch (const Error& e) {
            err << "refusing to overwrite unreadable bank " << opts.bank.string() << " (" << e.what()
                << "); pass --force\n";
            return kExitOverwrite;
        }
        if (existing != fingerprint) {
            err << "bank " << opts.bank.string() << " was built with \"" << existing
                << "\" but the config is \"" << fingerprint << "\"; pass --force to overwrite\n";
            return kExitOverwrite;
        }
    }

    const auto entries = limit_entries(manifest, cfg.max_train_samples);
    const auto embeddings = load_embeddings(entries, cfg.embedding, cfg.threads);
    const EmbeddingBank bank = EmbeddingBank::from_embeddings(embeddings, cfg.category, fingerprint);
    write_bank(bank, opts.bank);

    out << "fit: category=" << cfg.category << " N_train=" << bank.size() << " embedding="
        << format_dims(std::vector<std::size_t>{bank.channels(), bank.height(), bank.width()})
        << " time=" << fmt(seconds_since(start), "%.3f") << "s\n";
    return kExitOk;
}

int cmd_score(const ScoreOptions& opts, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    cfg.validate();
    const auto start = Clock::now();
    const DatasetManifest manifest = read_manifest(opts.test_manifest, Split::test, cfg.category);
    if (!report_violations(manifest, opts.test_manifest, err)) {
        return kExitManifest;
    }
    const std::string fingerprint = cfg.embedding.fingerprint();
    const std::string bank_fingerprint = read_bank_fingerprint(opts.bank);
    if (bank_fingerprint != fingerprint) {
        err << "bank " << opts.bank.string() << " was built with \"" << bank_fingerprint
            << "\" but the config is \"" << fingerprint << "\"\n";
        return kExitFingerprint;
    }
    const EmbeddingBank bank = read_bank(opts.bank);

    std::filesystem::create_directories(opts.out_dir / "maps");
    std::vector<ScoreRow> rows;
    double search_seconds = 0.0;
    const std::span<const ManifestEntry> entries(manifest.entries);
    for (std::size_t g = 0; g < entries.size(); g += kScoreGroup) {
        const auto group = entries.subspan(g, std::min(kScoreGroup, entries.size() - g));
        const auto tests = load_embeddings(group, cfg.embedding, cfg.threads);
        const auto t0 = Clock::now();
        const auto results = score_embeddings(tests, bank, cfg);
        search_seconds += seconds_since(t0);

        for (std::size_t i = 0; i < group.size(); ++i) {
            const auto& e = group[i];
            const auto& t = tests[i];
            char prefix[32];
            std::snprintf(prefix, sizeof prefix, "%04zu_", g + i);
            const std::filesystem::path rel = std::filesystem::path("maps") / (prefix + sanitize(t.image_id) + ".lwnm");
            write_map_file({t.image_id, t.original_height, t.original_width, e.label,
                            {results[i].patch.scores, results[i].pixel.pixels}},
                           opts.out_dir / rel);
            ScoreRow row{t.image_id, results[i].score, e.label, rel, std::nullopt};
            if (e.mask_path) {
                row.mask_path = std::filesystem::absolute(*e.mask_path).lexically_normal();
            }
            rows.push_back(std::move(row));
        }
    }
    write_scores_index(rows, opts.out_dir / "scores.tsv");

    const double n = static_cast<double>(std::max<std::size_t>(rows.size(), 1));
    out << "score: images=" << rows.size() << " window=" << cfg.search.window_size
        << " mode=" << to_string(cfg.search.mode) << " test_time=" << fmt(search_seconds / n, "%.6f")
        << "s/image total=" << fmt(seconds_since(start), "%.3f") << "s\n";
    return kExitOk;
}

int cmd_eval(const EvalOptions& opts, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    cfg.validate();
    const auto rows = read_scores_index(opts.scores_index);
    const auto base = opts.scores_index.parent_path();
    ScoredDataset dataset;
    dataset.category = cfg.category;
    dataset.images.resize(rows.size());
    parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
        const ScoreRow& r = rows[i];
        ScoredImage& img = dataset.images[i];
        img.image_id = r.image_id;
        img.score = r.score;
        img.label = r.label;
        const MapFile maps = read_map_file(r.map_path.is_absolute() ? r.map_path : base / r.map_path);
        img.pixel_map = maps.maps.back();
        if (r.mask_path) {
            img.mask = read_mask(*r.mask_path);
        }
    });

    EvalReport report;
    try {
        report = evaluate(dataset, cfg.fpr_cap, cfg.pro_bins);
    } catch (const MetricError& e) {
        err << "metric preconditions not met: " << e.what() << '\n';
        return kExitMetric;
    }

    if (!opts.report.parent_path().empty()) {
        std::filesystem::create_directories(opts.report.parent_path());
    }
    binio::write_atomically(opts.report, [&](std::ostream& o) { o << format_report(report); });
    auto curves = opts.curves.value_or(std::filesystem::path(opts.report.string() + ".curves.tsv"));
    binio::write_atomically(curves, [&](std::ostream& o) { o << format_curves(report); });

    out << "eval: category=" << report.category << " images=" << report.images
        << " auroc_image=" << fmt(report.auroc_image, "%.4f") << " aupro=" << fmt(report.aupro, "%.4f")
        << " (fpr_cap=" << fmt(report.fpr_cap) << ")\n";
    return kExitOk;
}

std::vector<SweepAxis> parse_sweep(std::string_view text) {
    std::vector<SweepAxis> axes;
    std::size_t lineno = 0;
    for (const auto& raw : split_on(text, '\n')) {
        ++lineno;
        std::istringstream line(raw);
        std::string first;
        if (!(line >> first) || first.front() == '#') {
            continue;
        }
        const auto eq = raw.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("sweep line " + std::to_string(lineno) + ": expected key = v1 v2 ...");
        }
        SweepAxis axis;
        std::istringstream key_stream(raw.substr(0, eq));
        key_stream >> axis.key;
        std::istringstream values(raw.substr(eq + 1));
        for (std::string v; values >> v;) {
            axis.values.push_back(v);
        }
        if (axis.key.empty() || axis.values.empty()) {
            throw ConfigError("sweep line " + std::to_string(lineno) + ": empty key or value list");
        }
        if (axis.key != "normalization") {
            RunConfig probe;
            for (const auto& v : axis.values) {
                apply_setting(probe, axis.key, v);
                probe.validate();
            }
        }
        axes.push_back(std::move(axis));
    }
    return axes;
}

int cmd_ablate(const AblateOptions& opts, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    cfg.validate();
    const DatasetManifest train = read_manifest(opts.train_manifest, Split::train, cfg.category);
    const DatasetManifest test = read_manifest(opts.test_manifest, Split::test, cfg.category);
    if (!report_violations(train, opts.train_manifest, err) || !report_violations(test, opts.test_manifest, err)) {
        return kExitManifest;
    }

    std::vector<std::vector<std::string>> rows{{}};
    for (const auto& axis : opts.sweep) {
        std::vector<std::vector<std::string>> next;
        for (const auto& prefix : rows) {
            for (const auto& v : axis.values) {
                auto r = prefix;
                r.push_back(v);
                next.push_back(std::move(r));
            }
        }
        rows = std::move(next);
    }

    std::vector<std::optional<BinaryMask>> masks(test.entries.size());
    parallel_for(test.entries.size(), cfg.threads, [&](std::size_t i) {
        if (test.entries[i].mask_path) {
            masks[i] = read_mask(*test.entries[i].mask_path);
        }
    });

    struct EmbeddingSet {
        std::vector<EmbeddingTensor> train;
        std::vector<EmbeddingTensor> test;
        double fit_seconds = 0.0;
    };
    std::map<std::string, EmbeddingSet> cache;
    const auto train_entries = limit_entries(train, cfg.max_train_samples);

    std::ostringstream table;
    for (const auto& axis : opts.sweep) {
        table << axis.key << '\t';
    }
    table << "window_size\tmode\tpooling\tinterpolation\taggregation\tn_train\tn_test\tauroc_image\taupro\t"
             "fit_seconds\ttest_seconds_per_image\n";

    for (const auto& values : rows) {
        RunConfig row_cfg = cfg;
        for (std::size_t a = 0; a < opts.sweep.size(); ++a) {
            if (opts.sweep[a].key != "normalization") {
                apply_setting(row_cfg, opts.sweep[a].key, values[a]);
            }
        }
        row_cfg.validate();

        const std::string fp = row_cfg.embedding.fingerprint();
        auto it = cache.find(fp);
        if (it == cache.end()) {
            EmbeddingSet set;
            const auto t0 = Clock::now();
            set.train = load_embeddings(train_entries, row_cfg.embedding, row_cfg.threads);
            set.fit_seconds = seconds_since(t0);
            set.test = load_embeddings(test.entries, row_cfg.embedding, row_cfg.threads);
            it = cache.emplace(fp, std::move(set)).first;
        }
        const EmbeddingSet& set = it->second;
        const EmbeddingBank bank = EmbeddingBank::from_embeddings(set.train, row_cfg.category, fp);

        const auto t0 = Clock::now();
        const auto results = score_embeddings(set.test, bank, row_cfg);
        const double test_seconds = seconds_since(t0) / static_cast<double>(std::max<std::size_t>(results.size(), 1));

        ScoredDataset dataset;
        dataset.category = row_cfg.category;
        for (std::size_t i = 0; i < results.size(); ++i) {
            dataset.images.push_back({set.test[i].image_id, results[i].score, test.entries[i].label,
                                      results[i].pixel.pixels, masks[i]});
        }
        EvalReport report;
        try {
            report = evaluate(dataset, row_cfg.fpr_cap, row_cfg.pro_bins);
        } catch (const MetricError& e) {
            err << "metric preconditions not met: " << e.what() << '\n';
            return kExitMetric;
        }

        for (const auto& v : values) {
            table << v << '\t';
        }
        const std::size_t effective_window = row_cfg.search.mode == SearchMode::per_location ? 1
                                                                                               : row_cfg.search.window_size;
        table << effective_window << '\t' << to_string(row_cfg.search.mode) << '\t'
              << (row_cfg.embedding.pooling ? "on" : "off") << '\t' << to_string(row_cfg.embedding.interpolation)
              << '\t' << to_string(row_cfg.aggregation) << '\t' << bank.size() << '\t' << results.size() << '\t'
              << fmt(report.auroc_image) << '\t' << fmt(report.aupro) << '\t' << fmt(set.fit_seconds, "%.6f")
              << '\t' << fmt(test_seconds, "%.6g") << '\n';
    }

    if (!opts.table.parent_path().empty()) {
        std::filesystem::create_directories(opts.table.parent_path());
    }
    binio::write_atomically(opts.table, [&](std::ostream& o) { o << table.str(); });
    out << table.str();
    return kExitOk;
}

int cmd_heatmap(const HeatmapOptions& opts, std::ostream& out, std::ostream& err) {
    const MapFile file = read_map_file(opts.map);
    const Tensor& pixels = file.maps.back();
    std::optional<Image8> background;
    if (opts.image) {
        background = read_png(*opts.image, 3);
        if (background->height != pixels.dim(0) || background->width != pixels.dim(1)) {
            err << "image " << opts.image->string() << " is " << background->height << "x" << background->width
                << " but the map is " << pixels.dim(0) << "x" << pixels.dim(1) << '\n';
            return kExitFailure;
        }
    }
    write_png(render_heatmap(pixels, background ? &*background : nullptr, opts.alpha), opts.out);
    out << "heatmap: " << opts.out.string() << " (" << pixels.dim(0) << "x" << pixels.dim(1) << ")\n";
    return kExitOk;
}

} // namespace lwinnn::cli
