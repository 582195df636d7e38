#include "lwinnn/cli/run_config.hpp"

#include "lwinnn/errors.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lwinnn::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::size_t parse_size(std::string_view key, std::string_view v) {
    std::size_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(std::string(key) + ": expected a non-negative integer, got \"" + std::string(v) + "\"");
    }
    return out;
}

// Accepts a plain byte count or a K/M/G (binary) suffix.
std::size_t parse_bytes(std::string_view key, std::string_view v) {
    std::size_t scale = 1;
    if (!v.empty()) {
        switch (v.back()) {
        case 'K':
        case 'k':
            scale = std::size_t{1} << 10;
            break;
        case 'M':
        case 'm':
            scale = std::size_t{1} << 20;
            break;
        case 'G':
        case 'g':
            scale = std::size_t{1} << 30;
            break;
        default:
            break;
        }
        if (scale != 1) {
            v.remove_suffix(1);
        }
    }
    return parse_size(key, v) * scale;
}

double parse_double(std::string_view key, std::string_view v) {
    const std::string s(v);
    char* end = nullptr;
    const double out = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ConfigError(std::string(key) + ": expected a number, got \"" + s + "\"");
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "on" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "off" || v == "0" || v == "no") {
        return false;
    }
    throw ConfigError(std::string(key) + ": expected on/off, got \"" + std::string(v) + "\"");
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view v) {
    std::vector<std::size_t> out;
    while (!v.empty()) {
        const auto comma = v.find(',');
        out.push_back(parse_size(key, trim(v.substr(0, comma))));
        if (comma == std::string_view::npos) {
            break;
        }
        v.remove_prefix(comma + 1);
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

void RunConfig::validate() const {
    embedding.validate();
    search.validate();
    if (!(blur_sigma > 0.0)) {
        throw ConfigError("blur_sigma must be > 0");
    }
    if (knn_k < 1) {
        throw ConfigError("knn_k must be >= 1");
    }
    if (!(fpr_cap > 0.0 && fpr_cap <= 1.0)) {
        throw ConfigError("fpr_cap must be in (0, 1]");
    }
    if (pro_bins == 1) {
        throw ConfigError("pro_bins must be 0 (exact) or >= 2");
    }
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
    value = trim(value);
    if (key == "pooling") {
        cfg.embedding.pooling = parse_bool(key, value);
    } else if (key == "pool_kernel") {
        cfg.embedding.pool_kernel = parse_size(key, value);
    } else if (key == "pool_stride") {
        cfg.embedding.pool_stride = parse_size(key, value);
    } else if (key == "interpolation") {
        cfg.embedding.interpolation = parse_interpolation(value);
    } else if (key == "layers") {
        cfg.embedding.layer_indices = parse_list(key, value);
    } else if (key == "window_size") {
        cfg.search.window_size = parse_size(key, value);
    } else if (key == "mode") {
        cfg.search.mode = parse_search_mode(value);
    } else if (key == "memory_budget") {
        cfg.search.memory_budget = parse_bytes(key, value);
    } else if (key == "aggregation") {
        cfg.aggregation = parse_aggregation(value);
    } else if (key == "max_after_blur") {
        cfg.max_after_blur = parse_bool(key, value);
    } else if (key == "blur_sigma") {
        cfg.blur_sigma = parse_double(key, value);
    } else if (key == "knn_k") {
        cfg.knn_k = parse_size(key, value);
    } else if (key == "fpr_cap") {
        cfg.fpr_cap = parse_double(key, value);
    } else if (key == "pro_bins") {
        if (value == "on" || value == "off") {
            cfg.pro_bins = value == "on" ? kDefaultProBins : 0;
        } else {
            cfg.pro_bins = parse_size(key, value);
        }
    } else if (key == "max_train_samples") {
        cfg.max_train_samples = parse_size(key, value);
    } else if (key == "category") {
        cfg.category = std::string(value);
    } else if (key == "threads") {
        cfg.threads = parse_size(key, value);
    } else {
        throw ConfigError("unknown config key \"" + std::string(key) + "\"");
    }
}

void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view source) {
    std::size_t lineno = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++lineno;
        line = trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": expected key = value");
        }
        try {
            apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    RunConfig cfg;
    apply_config_text(cfg, ss.str(), path.string());
    return cfg;
}

std::string setting_value(const RunConfig& cfg, std::string_view key) {
    if (key == "pooling") {
        return cfg.embedding.pooling ? "on" : "off";
    }
    if (key == "pool_kernel") {
        return std::to_string(cfg.embedding.pool_kernel);
    }
    if (key == "pool_stride") {
        return std::to_string(cfg.embedding.pool_stride);
    }
    if (key == "interpolation") {
        return std::string(to_string(cfg.embedding.interpolation));
    }
    if (key == "layers") {
        std::string s;
        for (std::size_t i = 0; i < cfg.embedding.layer_indices.size(); ++i) {
            s += (i ? "," : "") + std::to_string(cfg.embedding.layer_indices[i]);
        }
        return s;
    }
    if (key == "window_size") {
        return std::to_string(cfg.search.window_size);
    }
    if (key == "mode") {
        return std::string(to_string(cfg.search.mode));
    }
    if (key == "memory_budget") {
        return std::to_string(cfg.search.memory_budget);
    }
    if (key == "aggregation") {
        return std::string(to_string(cfg.aggregation));
    }
    if (key == "max_after_blur") {
        return cfg.max_after_blur ? "on" : "off";
    }
    if (key == "blur_sigma") {
        return fmt_double(cfg.blur_sigma);
    }
    if (key == "knn_k") {
        return std::to_string(cfg.knn_k);
    }
    if (key == "fpr_cap") {
        return fmt_double(cfg.fpr_cap);
    }
    if (key == "pro_bins") {
        return std::to_string(cfg.pro_bins);
    }
    if (key == "max_train_samples") {
        return std::to_string(cfg.max_train_samples);
    }
    if (key == "category") {
        return cfg.category;
    }
    if (key == "threads") {
        return std::to_string(cfg.threads);
    }
    throw ConfigError("unknown config key \"" + std::string(key) + "\"");
}

std::size_t threads_from_environment(std::size_t flag_value, bool flag_given) {
    if (flag_given) {
        return flag_value;
    }
    if (const char* env = std::getenv("LWINN_THREADS"); env && *env) {
        return parse_size("LWINN_THREADS", env);
    }
    return 0;
}

} // namespace lwinnn::cli
