#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fts/bench.hpp"
#include "fts/error.hpp"
#include "json.hpp"

namespace fts {

namespace {

using nlohmann::json;

std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// One CSV record; quoted cells may hold commas, doubled quotes escape quotes.
std::vector<std::string> split_csv_row(const std::string& line, int line_no) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    if (quoted) fail(errc::parse, "line " + std::to_string(line_no) + ": unterminated quote");
    cells.push_back(cell);
    return cells;
}

double parse_close_cell(const std::string& raw, int line_no) {
    std::string s = trim(raw);
    std::erase(s, ',');
    if (s.empty())
        fail(errc::parse, "line " + std::to_string(line_no) + ": empty close value");
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        fail(errc::parse, "line " + std::to_string(line_no) + ": bad close value '" + s + "'");
    return value;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open '" + path + "'");
    return in;
}

}  // namespace

PriceSeries load_prices(const std::string& path) {
    std::ifstream in = open_input(path);

    std::string line;
    if (!std::getline(in, line)) fail(errc::parse, "'" + path + "' is empty");
    std::vector<std::string> header = split_csv_row(line, 1);

    int date_col = -1, close_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name = lowercase(trim(header[i]));
        if (date_col < 0 && name == "date") date_col = static_cast<int>(i);
        if (close_col < 0 && (name == "close" || name == "price")) close_col = static_cast<int>(i);
    }
    if (close_col < 0) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            std::string name = lowercase(trim(header[i]));
            if (name.find("close") != std::string::npos ||
                name.find("price") != std::string::npos) {
                close_col = static_cast<int>(i);
                break;
            }
        }
    }
    if (date_col < 0 || close_col < 0)
        fail(errc::parse, "'" + path + "': header must name a date column and a close/price column");

    struct Row {
        Date date;
        double close;
        int line_no;
    };
    std::vector<Row> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_csv_row(line, line_no);
        if (static_cast<int>(cells.size()) <= std::max(date_col, close_col))
            fail(errc::parse, "line " + std::to_string(line_no) + ": expected at least " +
                                  std::to_string(std::max(date_col, close_col) + 1) + " columns");
        Date date;
        try {
            date = Date::parse(trim(cells[static_cast<std::size_t>(date_col)]));
        } catch (const Error& e) {
            fail(errc::parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
        double close = parse_close_cell(cells[static_cast<std::size_t>(close_col)], line_no);
        rows.push_back({date, close, line_no});
    }
    if (rows.empty()) fail(errc::parse, "'" + path + "': no data rows");

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].date == rows[i - 1].date)
            fail(errc::parse, "duplicate date " + rows[i].date.iso() + " (lines " +
                                  std::to_string(rows[i - 1].line_no) + " and " +
                                  std::to_string(rows[i].line_no) + ")");

    std::vector<Date> dates;
    std::vector<double> closes;
    dates.reserve(rows.size());
    closes.reserve(rows.size());
    for (const Row& r : rows) {
        dates.push_back(r.date);
        closes.push_back(r.close);
    }
    return make_price_series(std::move(dates), std::move(closes));
}

std::vector<NewsItem> load_news(const std::string& path) {
    std::ifstream in = open_input(path);

    std::vector<NewsItem> items;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            fail(errc::parse, "line " + std::to_string(line_no) + ": not a JSON object");
        for (const char* field : {"timestamp", "source", "text"})
            if (!obj.contains(field) || !obj[field].is_string())
                fail(errc::parse, "line " + std::to_string(line_no) + ": missing string field '" +
                                      field + "'");
        NewsItem item;
        try {
            item.timestamp = Timestamp::parse(obj["timestamp"].get<std::string>());
        } catch (const Error& e) {
            fail(errc::parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
        item.source = obj["source"].get<std::string>();
        item.text = obj["text"].get<std::string>();
        items.push_back(std::move(item));
    }
    return items;
}

void write_fixture(const TextFixture& fixture, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(errc::io, "cannot create directory '" + dir + "': " + ec.message());

    {
        std::ofstream out(fs::path(dir) / "prices.csv");
        if (!out) fail(errc::io, "cannot write prices.csv in '" + dir + "'");
        out << "date,close\n";
        for (std::size_t i = 0; i < fixture.prices.size(); ++i)
            out << fixture.prices.dates[i].iso() << ","
                << json(fixture.prices.closes[i]).dump() << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "news.jsonl");
        if (!out) fail(errc::io, "cannot write news.jsonl in '" + dir + "'");
        for (const NewsItem& item : fixture.news) {
            json obj;
            obj["timestamp"] = item.timestamp.rfc3339();
            obj["source"] = item.source;
            obj["text"] = item.text;
            out << obj.dump() << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "manifest.json");
        if (!out) fail(errc::io, "cannot write manifest.json in '" + dir + "'");
        json manifest;
        manifest["n_days"] = fixture.n_days;
        manifest["n_items"] = fixture.news.size();
        manifest["seed"] = fixture.seed;
        manifest["planted_correlation"] = fixture.planted_correlation;
        manifest["first_day"] = fixture.prices.dates.front().iso();
        manifest["last_day"] = fixture.prices.dates.back().iso();
        out << manifest.dump(2) << "\n";
    }
}

namespace {

void read_field(const json& obj, const char* key, std::string& out) {
    if (obj.contains(key)) out = obj.at(key).get<std::string>();
}
void read_field(const json& obj, const char* key, double& out) {
    if (obj.contains(key)) out = obj.at(key).get<double>();
}
void read_field(const json& obj, const char* key, int& out) {
    if (obj.contains(key)) out = obj.at(key).get<int>();
}
void read_field(const json& obj, const char* key, std::uint64_t& out) {
    if (obj.contains(key)) out = obj.at(key).get<std::uint64_t>();
}

void check_keys(const json& obj, std::initializer_list<const char*> known,
                const std::string& scope) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) fail(errc::invalid_argument, "config: unknown key '" + scope + key + "'");
    }
}

const std::vector<std::string> kAllModels = {"arima", "garch", "lstm", "text_encoder",
                                             "text_encoder_adapted"};

std::vector<std::string> parse_model_list(const std::string& csv) {
    std::vector<std::string> models;
    std::stringstream ss(csv);
    std::string name;
    while (std::getline(ss, name, ',')) {
        name = trim(name);
        if (name.empty()) continue;
        if (std::find(kAllModels.begin(), kAllModels.end(), name) == kAllModels.end())
            fail(errc::invalid_argument, "config: unknown model '" + name + "'");
        if (std::find(models.begin(), models.end(), name) == models.end())
            models.push_back(name);
    }
    return models;
}

}  // namespace

namespace {

BenchConfig config_from_parsed(const json& obj) {
    check_keys(obj,
               {"prices", "news", "out", "return_kind", "train_fraction", "seed", "models",
                "arima", "garch", "lstm", "text"},
               "");

    BenchConfig cfg;
    read_field(obj, "prices", cfg.prices_path);
    read_field(obj, "news", cfg.news_path);
    read_field(obj, "out", cfg.out_dir);
    read_field(obj, "return_kind", cfg.return_kind);
    read_field(obj, "train_fraction", cfg.train_fraction);
    read_field(obj, "seed", cfg.seed);
    if (obj.contains("models")) {
        if (!obj["models"].is_array()) fail(errc::parse, "config: 'models' must be an array");
        cfg.models.clear();
        for (const auto& m : obj["models"]) {
            std::string name = m.get<std::string>();
            if (std::find(kAllModels.begin(), kAllModels.end(), name) == kAllModels.end())
                fail(errc::invalid_argument, "config: unknown model '" + name + "'");
            cfg.models.push_back(name);
        }
    }
    if (obj.contains("arima")) {
        const json& a = obj["arima"];
        check_keys(a, {"p_max", "d_max", "q_max", "criterion"}, "arima.");
        read_field(a, "p_max", cfg.arima.p_max);
        read_field(a, "d_max", cfg.arima.d_max);
        read_field(a, "q_max", cfg.arima.q_max);
        read_field(a, "criterion", cfg.arima.criterion);
    }
    if (obj.contains("garch")) {
        const json& g = obj["garch"];
        check_keys(g, {"restarts"}, "garch.");
        read_field(g, "restarts", cfg.garch.restarts);
    }
    if (obj.contains("lstm")) {
        const json& l = obj["lstm"];
        check_keys(l, {"lookback", "hidden1", "hidden2", "epochs", "lr", "batch_size"}, "lstm.");
        read_field(l, "lookback", cfg.lstm.lookback);
        read_field(l, "hidden1", cfg.lstm.hidden1);
        read_field(l, "hidden2", cfg.lstm.hidden2);
        read_field(l, "epochs", cfg.lstm.epochs);
        read_field(l, "lr", cfg.lstm.lr);
        read_field(l, "batch_size", cfg.lstm.batch_size);
    }
    if (obj.contains("text")) {
        const json& t = obj["text"];
        check_keys(t,
                   {"d_model", "n_heads", "n_blocks", "d_ff", "max_len", "vocab_max", "min_freq",
                    "epochs", "lr", "mask_prob", "pretrain_epochs"},
                   "text.");
        read_field(t, "d_model", cfg.text.d_model);
        read_field(t, "n_heads", cfg.text.n_heads);
        read_field(t, "n_blocks", cfg.text.n_blocks);
        read_field(t, "d_ff", cfg.text.d_ff);
        read_field(t, "max_len", cfg.text.max_len);
        read_field(t, "vocab_max", cfg.text.vocab_max);
        read_field(t, "min_freq", cfg.text.min_freq);
        read_field(t, "epochs", cfg.text.epochs);
        read_field(t, "lr", cfg.text.lr);
        read_field(t, "mask_prob", cfg.text.mask_prob);
        read_field(t, "pretrain_epochs", cfg.text.pretrain_epochs);
    }
    return cfg;
}

}  // namespace

BenchConfig config_from_json_text(const std::string& text) {
    json obj = json::parse(text, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) fail(errc::parse, "config: not a JSON object");
    try {
        return config_from_parsed(obj);
    } catch (const json::exception& e) {
        fail(errc::parse, std::string("config: ") + e.what());
    }
}

BenchConfig load_config(const std::string& path) {
    std::ifstream in = open_input(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return config_from_json_text(buffer.str());
    } catch (const Error& e) {
        fail(e.code(), "'" + path + "': " + e.what());
    }
}

void apply_override(BenchConfig& cfg, const std::string& key, const std::string& value) {
    auto as_int = [&](int& slot) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc{} || ptr != value.data() + value.size())
            fail(errc::invalid_argument, "override " + key + ": bad integer '" + value + "'");
        slot = v;
    };
    auto as_u64 = [&](std::uint64_t& slot) {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc{} || ptr != value.data() + value.size())
            fail(errc::invalid_argument, "override " + key + ": bad integer '" + value + "'");
        slot = v;
    };
    auto as_double = [&](double& slot) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc{} || ptr != value.data() + value.size())
            fail(errc::invalid_argument, "override " + key + ": bad number '" + value + "'");
        slot = v;
    };

    if (key == "prices") cfg.prices_path = value;
    else if (key == "news") cfg.news_path = value;
    else if (key == "out") cfg.out_dir = value;
    else if (key == "return_kind") cfg.return_kind = value;
    else if (key == "train_fraction") as_double(cfg.train_fraction);
    else if (key == "seed") as_u64(cfg.seed);
    else if (key == "models") cfg.models = parse_model_list(value);
    else if (key == "arima.p_max") as_int(cfg.arima.p_max);
    else if (key == "arima.d_max") as_int(cfg.arima.d_max);
    else if (key == "arima.q_max") as_int(cfg.arima.q_max);
    else if (key == "arima.criterion") cfg.arima.criterion = value;
    else if (key == "garch.restarts") as_int(cfg.garch.restarts);
    else if (key == "lstm.lookback") as_int(cfg.lstm.lookback);
    else if (key == "lstm.hidden1") as_int(cfg.lstm.hidden1);
    else if (key == "lstm.hidden2") as_int(cfg.lstm.hidden2);
    else if (key == "lstm.epochs") as_int(cfg.lstm.epochs);
    else if (key == "lstm.lr") as_double(cfg.lstm.lr);
    else if (key == "lstm.batch_size") as_int(cfg.lstm.batch_size);
    else if (key == "text.d_model") as_int(cfg.text.d_model);
    else if (key == "text.n_heads") as_int(cfg.text.n_heads);
    else if (key == "text.n_blocks") as_int(cfg.text.n_blocks);
    else if (key == "text.d_ff") as_int(cfg.text.d_ff);
    else if (key == "text.max_len") as_int(cfg.text.max_len);
    else if (key == "text.vocab_max") as_int(cfg.text.vocab_max);
    else if (key == "text.min_freq") as_int(cfg.text.min_freq);
    else if (key == "text.epochs") as_int(cfg.text.epochs);
    else if (key == "text.lr") as_double(cfg.text.lr);
    else if (key == "text.mask_prob") as_double(cfg.text.mask_prob);
    else if (key == "text.pretrain_epochs") as_int(cfg.text.pretrain_epochs);
    else fail(errc::invalid_argument, "override: unknown key '" + key + "'");
}

std::string config_json(const BenchConfig& cfg) {
    json obj;
    obj["prices"] = cfg.prices_path;
    obj["news"] = cfg.news_path;
    obj["out"] = cfg.out_dir;
    obj["return_kind"] = cfg.return_kind;
    obj["train_fraction"] = cfg.train_fraction;
    obj["seed"] = cfg.seed;
    obj["models"] = cfg.models;
    obj["arima"] = {{"p_max", cfg.arima.p_max},
                    {"d_max", cfg.arima.d_max},
                    {"q_max", cfg.arima.q_max},
                    {"criterion", cfg.arima.criterion}};
    obj["garch"] = {{"restarts", cfg.garch.restarts}};
    obj["lstm"] = {{"lookback", cfg.lstm.lookback},   {"hidden1", cfg.lstm.hidden1},
                   {"hidden2", cfg.lstm.hidden2},     {"epochs", cfg.lstm.epochs},
                   {"lr", cfg.lstm.lr},               {"batch_size", cfg.lstm.batch_size}};
    obj["text"] = {{"d_model", cfg.text.d_model},
                   {"n_heads", cfg.text.n_heads},
                   {"n_blocks", cfg.text.n_blocks},
                   {"d_ff", cfg.text.d_ff},
                   {"max_len", cfg.text.max_len},
                   {"vocab_max", cfg.text.vocab_max},
                   {"min_freq", cfg.text.min_freq},
                   {"epochs", cfg.text.epochs},
                   {"lr", cfg.text.lr},
                   {"mask_prob", cfg.text.mask_prob},
                   {"pretrain_epochs", cfg.text.pretrain_epochs}};
    return obj.dump(2);
}

std::string config_hash(const BenchConfig& cfg) {
    // FNV-1a over the canonical serialization.
    std::string text = config_json(cfg);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace fts
