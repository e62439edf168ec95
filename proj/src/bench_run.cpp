#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fts/arima.hpp"
#include "fts/bench.hpp"
#include "fts/error.hpp"
#include "fts/garch.hpp"
#include "fts/lstm.hpp"
#include "fts/rng.hpp"
#include "fts/text.hpp"
#include "json.hpp"

namespace fts {

namespace {

using nlohmann::json;

// Shortest representation that parses back to the same double; the same
// serializer renders report.json, so CSV cells match it byte for byte.
std::string num(double value) { return json(value).dump(); }

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::span<const double> test_span(const ReturnSeries& returns, int test_size) {
    return std::span<const double>(returns.values).last(static_cast<std::size_t>(test_size));
}

double scored_rmse(std::span<const double> preds, const ReturnSeries& returns, int test_size) {
    double value = rmse(preds, test_span(returns, test_size));
    if (!std::isfinite(value)) fail(errc::numeric, "non-finite forecast");
    return value;
}

ModelResult run_arima_model(const BenchConfig& cfg, const ReturnSeries& returns, int train_size,
                            int test_size) {
    ReturnSeries train{
        {returns.dates.begin(), returns.dates.begin() + train_size},
        {returns.values.begin(), returns.values.begin() + train_size},
        returns.kind};
    Criterion criterion = criterion_from_name(cfg.arima.criterion);
    OrderSelection selection =
        select_order(train, cfg.arima.p_max, cfg.arima.d_max, cfg.arima.q_max, criterion);
    ArimaFit fit = fit_arima(train, selection.best);
    std::vector<double> preds = forecast_one_step(fit, returns.values, test_size);

    ModelResult result;
    result.ran = true;
    result.rmse = scored_rmse(preds, returns, test_size);
    result.summary = "ARIMA" + fit.order.label() + " by " + criterion_name(criterion) +
                     " over p<=" + std::to_string(cfg.arima.p_max) +
                     ", d<=" + std::to_string(cfg.arima.d_max) +
                     ", q<=" + std::to_string(cfg.arima.q_max);
    result.metrics["p"] = fit.order.p;
    result.metrics["d"] = fit.order.d;
    result.metrics["q"] = fit.order.q;
    result.metrics["c"] = fit.c;
    for (std::size_t i = 0; i < fit.phi.size(); ++i)
        result.metrics["phi_" + std::to_string(i + 1)] = fit.phi[i];
    for (std::size_t j = 0; j < fit.theta.size(); ++j)
        result.metrics["theta_" + std::to_string(j + 1)] = fit.theta[j];
    result.metrics["sigma2"] = fit.sigma2;
    result.metrics["loglik"] = fit.loglik;
    result.metrics["aic"] = fit.aic;
    result.metrics["bic"] = fit.bic;
    return result;
}

ModelResult run_garch_model(const BenchConfig& cfg, const ReturnSeries& returns, int train_size,
                            int test_size) {
    ReturnSeries train{
        {returns.dates.begin(), returns.dates.begin() + train_size},
        {returns.values.begin(), returns.values.begin() + train_size},
        returns.kind};
    GarchFitOptions opts;
    opts.restarts = cfg.garch.restarts;
    GarchFit fit = fit_garch(train, opts);

    std::vector<double> preds(static_cast<std::size_t>(test_size), fit.params.mu);

    // Volatility score over the test span: walk-forward filter of the full
    // series under the fitted parameters, started from the train-average
    // squared residual.
    double init = 0.0;
    for (int t = 0; t < train_size; ++t) {
        double eps = returns.values[static_cast<std::size_t>(t)] - fit.params.mu;
        init += eps * eps;
    }
    init /= static_cast<double>(train_size);
    std::vector<double> sigma2 = garch_filter(fit.params, returns.values, init);
    double qlike = 0.0;
    for (int t = train_size; t < train_size + test_size; ++t) {
        double eps = returns.values[static_cast<std::size_t>(t)] - fit.params.mu;
        qlike += std::log(sigma2[static_cast<std::size_t>(t)]) +
                 eps * eps / sigma2[static_cast<std::size_t>(t)];
    }
    qlike /= static_cast<double>(test_size);

    ModelResult result;
    result.ran = true;
    result.rmse = scored_rmse(preds, returns, test_size);
    std::ostringstream summary;
    summary << "GARCH(1,1) mu=" << num(fit.params.mu) << " alpha0=" << num(fit.params.alpha0)
            << " alpha1=" << num(fit.params.alpha1) << " beta1=" << num(fit.params.beta1);
    result.summary = summary.str();
    result.metrics["mu"] = fit.params.mu;
    result.metrics["alpha0"] = fit.params.alpha0;
    result.metrics["alpha1"] = fit.params.alpha1;
    result.metrics["beta1"] = fit.params.beta1;
    result.metrics["persistence"] = fit.params.alpha1 + fit.params.beta1;
    result.metrics["loglik"] = fit.loglik;
    result.metrics["qlike"] = qlike;
    return result;
}

ModelResult run_lstm_model(const BenchConfig& cfg, const ReturnSeries& returns, int train_size,
                           int test_size, std::uint64_t seed, TrainingHistory& history_out) {
    const int lookback = cfg.lstm.lookback;
    if (train_size < lookback + 1)
        fail(errc::invalid_argument, "train span must exceed the lookback window (" +
                                         std::to_string(train_size) + " <= " +
                                         std::to_string(lookback) + ")");

    std::span<const double> values(returns.values);
    WindowSet train = make_windows(values.first(static_cast<std::size_t>(train_size)), lookback);
    // Validation windows target exactly the test points, scaled with the
    // train-only bounds.
    WindowSet val = make_windows(values.subspan(static_cast<std::size_t>(train_size - lookback)),
                                 lookback, train.scale);

    LstmConfig net_cfg;
    net_cfg.lookback = lookback;
    net_cfg.hidden1 = cfg.lstm.hidden1;
    net_cfg.hidden2 = cfg.lstm.hidden2;
    net_cfg.seed = seed;
    LstmNetwork net = make_lstm(net_cfg);

    TrainOptions train_opts{.epochs = cfg.lstm.epochs, .lr = cfg.lstm.lr,
                            .batch_size = cfg.lstm.batch_size};
    history_out = train_lstm(net, train, val, train_opts);

    std::vector<double> preds = forecast_lstm(net, values, test_size, train.scale);

    ModelResult result;
    result.ran = true;
    result.rmse = scored_rmse(preds, returns, test_size);
    result.summary = "LSTM " + std::to_string(cfg.lstm.hidden1) + "/" +
                     std::to_string(cfg.lstm.hidden2) + " lookback " + std::to_string(lookback) +
                     ", " + std::to_string(cfg.lstm.epochs) + " epochs";
    result.metrics["final_train_mse"] = history_out.train_loss.back();
    if (!history_out.val_loss.empty())
        result.metrics["final_val_mse"] = history_out.val_loss.back();
    return result;
}

// Trailing PAD positions are inert in the encoder, so drop them from training
// sequences; headlines are far shorter than max_len.
TokenSequence trim_pads(TokenSequence seq) {
    int keep = std::max(seq.real_len, 1);
    seq.ids.resize(static_cast<std::size_t>(keep));
    seq.mask.resize(static_cast<std::size_t>(keep));
    return seq;
}

ModelResult run_text_model(const BenchConfig& cfg, const ReturnSeries& returns, int train_size,
                           int test_size, std::span<const NewsItem> news, bool adapted,
                           std::uint64_t seed, std::uint64_t mask_seed,
                           TrainingHistory& history_out) {
    if (news.empty()) {
        ModelResult result;
        result.notice = "skipped: no news";
        return result;
    }

    // Items dated after the final return day cannot be aligned; drop them.
    std::vector<NewsItem> usable;
    usable.reserve(news.size());
    const Date last_day = returns.dates.back();
    for (const NewsItem& item : news)
        if (!(last_day < item.timestamp.utc_date())) usable.push_back(item);
    int dropped = static_cast<int>(news.size() - usable.size());
    if (usable.empty()) {
        ModelResult result;
        result.notice = "skipped: no news within the return window";
        return result;
    }

    NewsAlignment alignment = align_news_to_days(usable, returns.dates);

    std::vector<std::string> train_texts;
    for (int day = 0; day < train_size; ++day)
        for (int k : alignment.day_items[static_cast<std::size_t>(day)])
            train_texts.push_back(usable[static_cast<std::size_t>(k)].text);
    if (train_texts.empty()) {
        ModelResult result;
        result.notice = "skipped: no news on train days";
        return result;
    }
    Vocab vocab = build_vocab(train_texts, cfg.text.min_freq, cfg.text.vocab_max);

    std::vector<TextExample> train_ex, val_ex;
    std::vector<TokenSequence> train_seqs;
    for (std::size_t day = 0; day < alignment.day_items.size(); ++day) {
        for (int k : alignment.day_items[day]) {
            TextExample ex;
            ex.seq = trim_pads(encode(usable[static_cast<std::size_t>(k)].text, vocab,
                                      cfg.text.max_len));
            ex.target = returns.values[day];
            if (static_cast<int>(day) < train_size) {
                train_seqs.push_back(ex.seq);
                train_ex.push_back(std::move(ex));
            } else {
                val_ex.push_back(std::move(ex));
            }
        }
    }

    TextConfig model_cfg;
    model_cfg.d_model = cfg.text.d_model;
    model_cfg.n_heads = cfg.text.n_heads;
    model_cfg.n_blocks = cfg.text.n_blocks;
    model_cfg.d_ff = cfg.text.d_ff;
    model_cfg.max_len = cfg.text.max_len;
    model_cfg.vocab_size = vocab.size();
    model_cfg.seed = seed;
    TextModel model = make_text_model(model_cfg);

    double pretrain_final = 0.0;
    if (adapted) {
        TrainOptions pre_opts{.epochs = cfg.text.pretrain_epochs, .lr = cfg.text.lr,
                              .batch_size = 0};
        TrainingHistory pre =
            pretrain_masked(model, train_seqs, cfg.text.mask_prob, pre_opts, mask_seed);
        pretrain_final = pre.train_loss.empty() ? 0.0 : pre.train_loss.back();
    }

    TrainOptions fine_opts{.epochs = cfg.text.epochs, .lr = cfg.text.lr, .batch_size = 0};
    history_out = train_text_regressor(model, train_ex, val_ex, fine_opts);

    DailyPredictions daily = predict_daily(model, vocab, usable, alignment);
    std::span<const double> preds(daily.values);
    preds = preds.last(static_cast<std::size_t>(test_size));

    ModelResult result;
    result.ran = true;
    result.rmse = scored_rmse(preds, returns, test_size);
    std::ostringstream summary;
    summary << "encoder d_model=" << cfg.text.d_model << " blocks=" << cfg.text.n_blocks
            << " heads=" << cfg.text.n_heads << " vocab=" << vocab.size();
    if (adapted) summary << ", masked pretraining " << cfg.text.pretrain_epochs << " epochs";
    result.summary = summary.str();
    result.metrics["vocab_size"] = vocab.size();
    result.metrics["train_items"] = static_cast<double>(train_ex.size());
    result.metrics["test_items"] = static_cast<double>(val_ex.size());
    if (dropped > 0) result.metrics["dropped_items"] = dropped;
    result.metrics["carried_days"] = static_cast<double>(daily.carried.size());
    result.metrics["final_train_mse"] = history_out.train_loss.back();
    if (!history_out.val_loss.empty())
        result.metrics["final_val_mse"] = history_out.val_loss.back();
    if (adapted) result.metrics["pretrain_final_ce"] = pretrain_final;
    return result;
}

const std::vector<std::string>& known_models() {
    static const std::vector<std::string> names = {"arima", "garch", "lstm", "text_encoder",
                                                   "text_encoder_adapted"};
    return names;
}

}  // namespace

RunOutput run_benchmark(const BenchConfig& config) {
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
        fail(errc::invalid_argument, "train_fraction must lie in (0,1)");
    if (config.models.empty()) fail(errc::invalid_argument, "no models enabled");
    std::vector<std::string> models;
    for (const std::string& name : config.models) {
        const auto& known = known_models();
        if (std::find(known.begin(), known.end(), name) == known.end())
            fail(errc::invalid_argument, "unknown model '" + name + "'");
        if (std::find(models.begin(), models.end(), name) == models.end())
            models.push_back(name);
    }
    ReturnKind kind = return_kind_from_name(config.return_kind);
    if (config.prices_path.empty()) fail(errc::invalid_argument, "no price file configured");

    PriceSeries prices = load_prices(config.prices_path);
    ReturnSeries returns = compute_returns(prices, kind);
    SplitSeries split = train_test_split(returns, config.train_fraction);
    const int train_size = static_cast<int>(split.train.size());
    const int test_size = static_cast<int>(split.test.size());
    if (train_size < 1 || test_size < 1)
        fail(errc::invalid_argument,
             "price series too short: the split leaves an empty train or test span");

    std::vector<NewsItem> news;
    if (!config.news_path.empty()) news = load_news(config.news_path);

    RunOutput output;
    output.returns = returns;
    BenchmarkReport& report = output.report;
    report.config_hash = config_hash(config);
    report.seed = config.seed;
    report.return_kind = return_kind_name(kind);
    report.train_fraction = config.train_fraction;
    report.n_returns = static_cast<int>(returns.size());
    report.train_size = train_size;
    report.test_size = test_size;
    report.train_start = split.train.dates.front().iso();
    report.train_end = split.train.dates.back().iso();
    report.test_start = split.test.dates.front().iso();
    report.test_end = split.test.dates.back().iso();

    for (const std::string& name : models) {
        auto t0 = std::chrono::steady_clock::now();
        ModelResult result;
        TrainingHistory history;
        try {
            if (name == "arima") {
                result = run_arima_model(config, returns, train_size, test_size);
            } else if (name == "garch") {
                result = run_garch_model(config, returns, train_size, test_size);
            } else if (name == "lstm") {
                result = run_lstm_model(config, returns, train_size, test_size,
                                        derive_seed(config.seed, "lstm"), history);
            } else if (name == "text_encoder") {
                result = run_text_model(config, returns, train_size, test_size, news, false,
                                        derive_seed(config.seed, "text_encoder"), 0, history);
            } else {
                result = run_text_model(config, returns, train_size, test_size, news, true,
                                        derive_seed(config.seed, "text_encoder_adapted"),
                                        derive_seed(config.seed, "text_encoder_adapted.mask"),
                                        history);
            }
        } catch (const Error& e) {
            result = ModelResult{};
            result.notice = std::string("failed: ") + e.what();
        }
        result.name = name;
        report.entries.push_back(std::move(result));
        output.wall_times[name] = elapsed_seconds(t0);
        if (!history.train_loss.empty()) output.histories[name] = std::move(history);
    }

    bool any_ran = std::any_of(report.entries.begin(), report.entries.end(),
                               [](const ModelResult& r) { return r.ran; });
    if (!any_ran) fail(errc::invalid_argument, "no model produced a result");
    return output;
}

std::string report_json(const BenchmarkReport& report) {
    json obj;
    obj["config_hash"] = report.config_hash;
    obj["seed"] = report.seed;
    obj["return_kind"] = report.return_kind;
    obj["train_fraction"] = report.train_fraction;
    obj["n_returns"] = report.n_returns;
    obj["train_size"] = report.train_size;
    obj["test_size"] = report.test_size;
    obj["train_start"] = report.train_start;
    obj["train_end"] = report.train_end;
    obj["test_start"] = report.test_start;
    obj["test_end"] = report.test_end;
    obj["entries"] = json::array();
    for (const ModelResult& entry : report.entries) {
        json e;
        e["name"] = entry.name;
        e["ran"] = entry.ran;
        if (!entry.notice.empty()) e["notice"] = entry.notice;
        if (entry.ran) e["rmse"] = entry.rmse;
        if (!entry.summary.empty()) e["summary"] = entry.summary;
        if (!entry.metrics.empty()) e["metrics"] = entry.metrics;
        obj["entries"].push_back(std::move(e));
    }
    return obj.dump(2);
}

BenchmarkReport report_from_json(const std::string& text) {
    json obj = json::parse(text, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) fail(errc::parse, "report: not a JSON object");
    BenchmarkReport report;
    report.config_hash = obj.value("config_hash", std::string());
    report.seed = obj.value("seed", std::uint64_t{0});
    report.return_kind = obj.value("return_kind", std::string());
    report.train_fraction = obj.value("train_fraction", 0.0);
    report.n_returns = obj.value("n_returns", 0);
    report.train_size = obj.value("train_size", 0);
    report.test_size = obj.value("test_size", 0);
    report.train_start = obj.value("train_start", std::string());
    report.train_end = obj.value("train_end", std::string());
    report.test_start = obj.value("test_start", std::string());
    report.test_end = obj.value("test_end", std::string());
    for (const json& e : obj.value("entries", json::array())) {
        ModelResult entry;
        entry.name = e.value("name", std::string());
        entry.ran = e.value("ran", false);
        entry.notice = e.value("notice", std::string());
        entry.rmse = e.value("rmse", 0.0);
        entry.summary = e.value("summary", std::string());
        if (e.contains("metrics"))
            entry.metrics = e["metrics"].get<std::map<std::string, double>>();
        report.entries.push_back(std::move(entry));
    }
    return report;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(errc::io, "cannot write '" + path.string() + "'");
    return out;
}

struct PlotSeries {
    std::string label;
    const std::vector<double>* values;
    std::string color;
};

// Minimal static line chart: background, axes, one polyline per series, a
// small legend. Only the data curves use <polyline>.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           std::span<const PlotSeries> series) {
    const double width = 960, height = 480;
    const double left = 64, right = 24, top = 36, bottom = 44;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    std::size_t n_max = 0;
    double y_min = 0.0, y_max = 0.0;
    bool first = true;
    for (const PlotSeries& s : series) {
        n_max = std::max(n_max, s.values->size());
        for (double v : *s.values) {
            if (first) {
                y_min = y_max = v;
                first = false;
            } else {
                y_min = std::min(y_min, v);
                y_max = std::max(y_max, v);
            }
        }
    }
    if (first) fail(errc::invalid_argument, "plot: no data");
    double pad = (y_max - y_min) * 0.05;
    if (pad == 0.0) pad = std::max(std::abs(y_max), 1.0) * 0.05;
    y_min -= pad;
    y_max += pad;

    auto x_at = [&](std::size_t i, std::size_t n) {
        if (n <= 1) return left + plot_w / 2.0;
        return left + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    auto y_at = [&](double v) { return top + plot_h * (1.0 - (v - y_min) / (y_max - y_min)); };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    auto fmt_tick = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4g", v);
        return std::string(buf);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "  <text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
    svg << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    svg << "  <line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
        << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
    svg << "  <text x=\"" << left - 6 << "\" y=\"" << y_at(y_max) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(y_max) << "</text>\n";
    svg << "  <text x=\"" << left - 6 << "\" y=\"" << y_at(y_min) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(y_min) << "</text>\n";
    svg << "  <text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
        << "</text>\n";

    double legend_x = left + 12;
    for (const PlotSeries& s : series) {
        svg << "  <text x=\"" << legend_x << "\" y=\"" << top + 14
            << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << s.color << "\">"
            << s.label << "</text>\n";
        legend_x += 14.0 * static_cast<double>(s.label.size()) * 0.6 + 24;
    }

    for (const PlotSeries& s : series) {
        const std::vector<double>& v = *s.values;
        svg << "  <polyline fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) svg << " ";
            svg << fmt(x_at(i, v.size())) << "," << fmt(y_at(v[i]));
        }
        svg << "\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

void emit_report(const RunOutput& output, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(errc::io, "cannot create directory '" + dir + "': " + ec.message());

    {
        std::ofstream out = open_output(fs::path(dir) / "report.json");
        out << report_json(output.report) << "\n";
    }
    {
        std::ofstream out = open_output(fs::path(dir) / "summary.csv");
        out << "model,rmse\n";
        std::vector<const ModelResult*> ran, skipped;
        for (const ModelResult& entry : output.report.entries)
            (entry.ran ? ran : skipped).push_back(&entry);
        std::stable_sort(ran.begin(), ran.end(),
                         [](const ModelResult* a, const ModelResult* b) {
                             return a->rmse < b->rmse;
                         });
        for (const ModelResult* entry : ran) out << entry->name << "," << num(entry->rmse) << "\n";
        for (const ModelResult* entry : skipped) out << entry->name << ",\n";
    }
    {
        std::ofstream out = open_output(fs::path(dir) / "timings.csv");
        out << "model,wall_time_s\n";
        for (const ModelResult& entry : output.report.entries) {
            auto it = output.wall_times.find(entry.name);
            double secs = it == output.wall_times.end() ? 0.0 : it->second;
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", secs);
            out << entry.name << "," << buf << "\n";
        }
    }
}

void emit_plots(const ReturnSeries& returns,
                const std::map<std::string, TrainingHistory>& histories, const std::string& dir) {
    namespace fs = std::filesystem;
    if (returns.size() == 0) fail(errc::invalid_argument, "emit_plots: empty return series");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(errc::io, "cannot create directory '" + dir + "': " + ec.message());

    {
        std::ofstream out = open_output(fs::path(dir) / "returns.csv");
        out << "date,return\n";
        for (std::size_t i = 0; i < returns.size(); ++i)
            out << returns.dates[i].iso() << "," << num(returns.values[i]) << "\n";
    }
    {
        std::ofstream out = open_output(fs::path(dir) / "returns.svg");
        PlotSeries series[]{{"daily return", &returns.values, "#1f77b4"}};
        out << svg_line_chart("Daily returns", "trading day", series);
    }

    for (const auto& [name, history] : histories) {
        if (history.train_loss.empty())
            fail(errc::invalid_argument, "emit_plots: empty history for '" + name + "'");
        {
            std::ofstream out = open_output(fs::path(dir) / ("loss_" + name + ".csv"));
            out << "epoch,train_loss,val_loss\n";
            for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
                out << (i + 1) << "," << num(history.train_loss[i]) << ",";
                if (i < history.val_loss.size()) out << num(history.val_loss[i]);
                out << "\n";
            }
        }
        {
            std::ofstream out = open_output(fs::path(dir) / ("loss_" + name + ".svg"));
            std::vector<PlotSeries> series{{"train", &history.train_loss, "#1f77b4"}};
            if (!history.val_loss.empty())
                series.push_back({"val", &history.val_loss, "#d62728"});
            out << svg_line_chart("Training loss: " + name, "epoch", series);
        }
    }
}

RunOutput run_and_emit(const BenchConfig& config) {
    RunOutput output = run_benchmark(config);
    emit_report(output, config.out_dir);
    emit_plots(output.returns, output.histories, config.out_dir);
    std::ofstream out = open_output(std::filesystem::path(config.out_dir) / "config.json");
    out << config_json(config) << "\n";
    return output;
}

int run_self_check(std::ostream& out) {
    int failures = 0;
    auto check = [&](const std::string& name, auto&& fn) {
        bool ok = false;
        std::string why;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            why = e.what();
        }
        out << (ok ? "ok   - " : "FAIL - ") << name;
        if (!ok && !why.empty()) out << " (" << why << ")";
        out << "\n";
        if (!ok) ++failures;
    };

    auto make_series = [](std::vector<double> values) {
        ReturnSeries s;
        s.values = std::move(values);
        Date d = Date::from_ymd(2020, 1, 1);
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            s.dates.push_back(d);
            d = d.next_day();
        }
        return s;
    };

    check("rmse matches the direct definition", [] {
        std::vector<double> p{1.0, 2.0}, a{2.0, 4.0};
        return std::abs(rmse(p, a) - std::sqrt(2.5)) < 1e-15;
    });
    check("train/test split follows the floor rule", [&] {
        ReturnSeries s = make_series(std::vector<double>(100, 0.0));
        SplitSeries split = train_test_split(s, 0.75);
        return split.train.size() == 75 && split.test.size() == 25;
    });
    check("date parser reads both layouts", [] {
        return Date::parse("Dec 31, 2020").iso() == "2020-12-31" &&
               Date::parse("2020-12-31") == Date::from_ymd(2020, 12, 31);
    });
    check("return computation matches hand values", [] {
        PriceSeries prices = make_price_series(
            {Date::from_ymd(2020, 1, 1), Date::from_ymd(2020, 1, 2)}, {100.0, 110.0});
        ReturnSeries simple = compute_returns(prices, ReturnKind::simple);
        ReturnSeries log_r = compute_returns(prices, ReturnKind::log);
        return std::abs(simple.values[0] - 0.1) < 1e-15 &&
               std::abs(log_r.values[0] - std::log(1.1)) < 1e-15;
    });
    check("white-noise residual sum matches the closed form", [] {
        std::vector<double> params{0.0};
        std::vector<double> series{1.0, -1.0, 2.0};
        return std::abs(arima_css_objective(params, series, 0, 0) - 6.0) < 1e-15;
    });
    check("garch log-likelihood matches a two-term hand computation", [] {
        GarchParams params{.mu = 0.1, .alpha0 = 0.05, .alpha1 = 0.1, .beta1 = 0.8};
        std::vector<double> r{0.3, -0.1};
        double s2_0 = 1.0;
        double eps0 = 0.2, eps1 = -0.2;
        double s2_1 = 0.05 + 0.1 * eps0 * eps0 + 0.8 * s2_0;
        double expected = -0.5 * (std::log(2.0 * std::numbers::pi) + std::log(s2_0) +
                                  eps0 * eps0 / s2_0) -
                          0.5 * (std::log(2.0 * std::numbers::pi) + std::log(s2_1) +
                                 eps1 * eps1 / s2_1);
        return std::abs(garch_log_likelihood(params, r, 1.0) - expected) < 1e-10;
    });
    check("simplex descends a shifted quadratic", [] {
        Objective f = [](std::span<const double> x) {
            return (x[0] - 3.0) * (x[0] - 3.0) + (x[1] + 1.0) * (x[1] + 1.0);
        };
        std::vector<double> x0{0.0, 0.0};
        OptimResult r = minimize_simplex(f, x0);
        return r.converged && r.f_star < 1e-8;
    });
    check("adam reduces a quadratic", [] {
        std::vector<double> x{1.0};
        AdamState state(1, {.lr = 0.05});
        for (int i = 0; i < 200; ++i) {
            std::vector<double> g{2.0 * x[0]};
            adam_step(x, g, state);
        }
        return std::abs(x[0]) < 0.5;
    });
    check("lstm gradients match finite differences", [] {
        std::vector<double> series(20);
        for (std::size_t i = 0; i < series.size(); ++i)
            series[i] = std::sin(0.4 * static_cast<double>(i));
        WindowSet windows = make_windows(series, 4);
        LstmNetwork net = make_lstm({.lookback = 4, .hidden1 = 3, .hidden2 = 2, .seed = 7});
        Eigen::VectorXd grad;
        compute_gradients(net, windows, grad);
        Eigen::VectorXd flat = lstm_flatten(net);
        std::vector<double> x(flat.data(), flat.data() + flat.size());
        Objective f = [&](std::span<const double> p) {
            LstmNetwork probe = net;
            lstm_set_params(probe, Eigen::Map<const Eigen::VectorXd>(
                                       p.data(), static_cast<Eigen::Index>(p.size())));
            return lstm_mse(probe, windows);
        };
        std::vector<double> numeric = finite_diff_gradient(f, x);
        std::vector<double> analytic(grad.data(), grad.data() + grad.size());
        return check_gradient(analytic, numeric) < 1e-4;
    });
    check("attention rows sum to one and PAD keys get zero weight", [] {
        Rng rng(11);
        Eigen::MatrixXd q(3, 4), k(3, 4), v(3, 4);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) {
                q(i, j) = rng.next_normal();
                k(i, j) = rng.next_normal();
                v(i, j) = rng.next_normal();
            }
        AttentionResult res = scaled_dot_attention(q, k, v, {1, 1, 0});
        for (int i = 0; i < 3; ++i) {
            if (std::abs(res.weights.row(i).sum() - 1.0) > 1e-12) return false;
            if (res.weights(i, 2) != 0.0) return false;
        }
        return true;
    });
    auto text_fixture = [] {
        std::vector<std::string> texts{"stocks rally on earnings", "stocks slide on rates"};
        Vocab vocab = build_vocab(texts);
        TextConfig cfg{.d_model = 8, .n_heads = 2, .n_blocks = 1, .d_ff = 16, .max_len = 6,
                       .vocab_size = vocab.size(), .seed = 13};
        TextModel model = make_text_model(cfg);
        std::vector<TokenSequence> seqs{encode(texts[0], vocab, 6), encode(texts[1], vocab, 6)};
        return std::tuple(std::move(vocab), std::move(model), std::move(seqs));
    };
    check("regression gradients match finite differences", [&] {
        auto [vocab, model, seqs] = text_fixture();
        std::vector<TextExample> batch{{seqs[0], 0.02}, {seqs[1], -0.01}};
        Eigen::VectorXd grad;
        regression_gradients(model, batch, grad);
        Eigen::VectorXd flat = text_flatten(model);
        std::vector<double> x(flat.data(), flat.data() + flat.size());
        Objective f = [&](std::span<const double> p) {
            TextModel probe = model;
            text_set_params(probe, Eigen::Map<const Eigen::VectorXd>(
                                       p.data(), static_cast<Eigen::Index>(p.size())));
            return regression_mse(probe, batch);
        };
        std::vector<double> numeric = finite_diff_gradient(f, x);
        std::vector<double> analytic(grad.data(), grad.data() + grad.size());
        return check_gradient(analytic, numeric) < 1e-4;
    });
    check("masked-lm gradients match finite differences", [&] {
        auto [vocab, model, seqs] = text_fixture();
        Rng rng(3);
        std::vector<MaskedExample> batch = sample_masks(seqs, 0.5, rng);
        if (batch.empty()) return false;
        Eigen::VectorXd grad;
        masked_gradients(model, batch, grad);
        Eigen::VectorXd flat = text_flatten(model);
        std::vector<double> x(flat.data(), flat.data() + flat.size());
        Objective f = [&](std::span<const double> p) {
            TextModel probe = model;
            text_set_params(probe, Eigen::Map<const Eigen::VectorXd>(
                                       p.data(), static_cast<Eigen::Index>(p.size())));
            return masked_loss(probe, batch);
        };
        std::vector<double> numeric = finite_diff_gradient(f, x);
        std::vector<double> analytic(grad.data(), grad.data() + grad.size());
        return check_gradient(analytic, numeric) < 1e-4;
    });
    check("vocabulary reserves the special tokens", [] {
        std::vector<std::string> texts{"up up down"};
        Vocab vocab = build_vocab(texts);
        return vocab.words[0] == "[PAD]" && vocab.words[1] == "[UNK]" &&
               vocab.words[2] == "[CLS]" && vocab.words[3] == "[MASK]" &&
               vocab.id_of("up") >= 4;
    });
    check("masked loss of a zero model equals log vocab size", [&] {
        auto [vocab, model, seqs] = text_fixture();
        text_set_params(model, Eigen::VectorXd::Zero(text_param_count(model)));
        Rng rng(5);
        std::vector<MaskedExample> batch = sample_masks(seqs, 0.4, rng);
        if (batch.empty()) return false;
        return std::abs(masked_loss(model, batch) - std::log(vocab.size())) < 1e-12;
    });
    check("seed derivation separates model streams", [] {
        return derive_seed(42, "arima") != derive_seed(42, "lstm") &&
               derive_seed(42, "lstm") == derive_seed(42, "lstm");
    });
    return failures;
}

}  // namespace fts
