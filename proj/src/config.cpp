#include "fedlf/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fedlf {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

bool parse_long(const std::string& s, long long& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

bool parse_bool(const std::string& s, bool& out) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        out = true;
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        out = false;
        return true;
    }
    return false;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);  // round-trips any double
    os << v;
    return os.str();
}

// Collects per-key setters; apply() records a problem instead of throwing so
// every bad key surfaces in one error.
struct KeyTable {
    std::map<std::string, std::function<void(const std::string&)>> setters;
    std::vector<std::string>* problems = nullptr;

    void apply(const std::string& key, const std::string& value,
               const std::string& where) {
        auto it = setters.find(key);
        if (it == setters.end()) {
            problems->push_back(where + ": unknown key '" + key + "'");
            return;
        }
        it->second(value);
    }
};

KeyTable make_table(ExperimentConfig& c, std::vector<std::string>& problems) {
    KeyTable t;
    t.problems = &problems;

    auto bad = [&problems](const std::string& key, const std::string& value,
                           const std::string& expected) {
        problems.push_back("key '" + key + "': cannot parse '" + value +
                           "' as " + expected);
    };
    auto set_d = [&, bad](const std::string& key, double& field) {
        t.setters[key] = [key, &field, bad](const std::string& v) {
            double x;
            if (parse_double(v, x))
                field = x;
            else
                bad(key, v, "a real number");
        };
    };
    auto set_i = [&, bad](const std::string& key, int& field) {
        t.setters[key] = [key, &field, bad](const std::string& v) {
            long long x;
            if (parse_long(v, x) && x >= INT32_MIN && x <= INT32_MAX)
                field = static_cast<int>(x);
            else
                bad(key, v, "an integer");
        };
    };
    auto set_l = [&, bad](const std::string& key, long& field) {
        t.setters[key] = [key, &field, bad](const std::string& v) {
            long long x;
            if (parse_long(v, x))
                field = static_cast<long>(x);
            else
                bad(key, v, "an integer");
        };
    };
    auto set_b = [&, bad](const std::string& key, bool& field) {
        t.setters[key] = [key, &field, bad](const std::string& v) {
            bool x;
            if (parse_bool(v, x))
                field = x;
            else
                bad(key, v, "a boolean");
        };
    };
    auto set_s = [&](const std::string& key, std::string& field) {
        t.setters[key] = [&field](const std::string& v) { field = v; };
    };

    t.setters["dataset"] = [&c, bad](const std::string& v) {
        if (v == "synthetic")
            c.dataset = DatasetKind::kSynthetic;
        else if (v == "cifar10")
            c.dataset = DatasetKind::kCifar10;
        else
            bad("dataset", v, "one of synthetic|cifar10");
    };
    set_s("data_path", c.data_path);
    set_s("eval_path", c.eval_path);
    set_i("num_classes", c.num_classes);
    set_i("input_dim", c.input_dim);
    set_l("n_max", c.n_max);
    set_d("imbalance_factor", c.imbalance_factor);
    set_d("class_spread", c.class_spread);
    set_l("test_per_class", c.test_per_class);

    set_i("num_clients", c.num_clients);
    set_d("dirichlet_alpha", c.dirichlet_alpha);

    set_i("num_rounds", c.num_rounds);
    set_d("online_rate", c.online_rate);
    set_i("local_epochs", c.local_epochs);
    set_i("batch_size", c.batch_size);
    set_d("learning_rate", c.learning_rate);
    t.setters["method"] = [&c, bad](const std::string& v) {
        if (v == "fedavg")
            c.method = Method::kFedAvg;
        else if (v == "fedprox")
            c.method = Method::kFedProx;
        else if (v == "focal")
            c.method = Method::kFocal;
        else if (v == "fedlf")
            c.method = Method::kFedLf;
        else
            bad("method", v, "one of fedavg|fedprox|focal|fedlf");
    };
    set_d("focal_gamma", c.focal_gamma);
    set_d("prox_mu", c.prox_mu);

    set_d("lambda", c.lambda);
    set_d("gamma", c.gamma);
    set_d("smoothing_factor", c.smoothing_factor);
    set_d("tau", c.tau);
    set_b("decorrelation_exclude_diagonal", c.decorrelation_exclude_diagonal);

    t.setters["hidden_widths"] = [&c, bad](const std::string& v) {
        std::vector<int> widths;
        std::stringstream ss(v);
        std::string item;
        bool ok = true;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            long long x;
            if (parse_long(item, x) && x >= 1 && x <= INT32_MAX)
                widths.push_back(static_cast<int>(x));
            else
                ok = false;
        }
        if (ok)
            c.hidden_widths = widths;
        else
            bad("hidden_widths", v, "a comma-separated list of positive integers");
    };
    set_i("feature_dim", c.feature_dim);
    t.setters["activation"] = [&c, bad](const std::string& v) {
        if (v == "relu")
            c.activation = Activation::kRelu;
        else if (v == "tanh")
            c.activation = Activation::kTanh;
        else
            bad("activation", v, "one of relu|tanh");
    };

    set_l("head_threshold", c.head_threshold);
    set_l("tail_threshold", c.tail_threshold);

    t.setters["seed"] = [&c, bad](const std::string& v) {
        errno = 0;
        char* end = nullptr;
        const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
        if (!v.empty() && errno == 0 && end == v.c_str() + v.size())
            c.seed = x;
        else
            bad("seed", v, "a non-negative integer");
    };
    set_s("out", c.out);
    t.setters["format"] = [&c, bad](const std::string& v) {
        if (v == "csv")
            c.format = ReportFormat::kCsv;
        else if (v == "jsonl")
            c.format = ReportFormat::kJsonl;
        else
            bad("format", v, "one of csv|jsonl");
    };
    set_s("checkpoint", c.checkpoint);
    return t;
}

void validate(const ExperimentConfig& c, std::vector<std::string>& problems) {
    auto require = [&problems](bool ok, const std::string& msg) {
        if (!ok) problems.push_back(msg);
    };
    require(c.num_classes >= 2, "num_classes must be >= 2");
    require(c.input_dim >= 1, "input_dim must be >= 1");
    require(c.n_max >= 1, "n_max must be >= 1");
    require(c.imbalance_factor >= 1.0, "imbalance_factor must be >= 1");
    require(c.class_spread > 0.0, "class_spread must be > 0");
    require(c.test_per_class >= 1, "test_per_class must be >= 1");
    if (c.dataset == DatasetKind::kCifar10) {
        require(!c.data_path.empty(), "dataset=cifar10 requires data_path");
        require(!c.eval_path.empty(), "dataset=cifar10 requires eval_path");
        require(c.num_classes == 10, "dataset=cifar10 requires num_classes=10");
    }

    require(c.num_clients >= 1, "num_clients must be >= 1");
    require(c.dirichlet_alpha > 0.0, "dirichlet_alpha must be > 0");

    require(c.num_rounds >= 0, "num_rounds must be >= 0");
    require(c.online_rate > 0.0 && c.online_rate <= 1.0,
            "online_rate must be in (0,1]");
    require(c.local_epochs >= 1, "local_epochs must be >= 1");
    require(c.batch_size >= 1, "batch_size must be >= 1");
    require(c.learning_rate >= 0.0, "learning_rate must be >= 0");
    require(c.focal_gamma >= 0.0, "focal_gamma must be >= 0");
    require(c.prox_mu >= 0.0, "prox_mu must be >= 0");

    require(c.lambda >= 0.0, "lambda must be >= 0");
    require(c.gamma >= 0.0, "gamma must be >= 0");
    require(c.smoothing_factor >= 0.0 && c.smoothing_factor <= 1.0,
            "smoothing_factor must be in [0,1]");
    require(c.tau >= 0.0, "tau must be >= 0");

    require(c.feature_dim >= 1, "feature_dim must be >= 1");
    for (int w : c.hidden_widths)
        require(w >= 1, "hidden_widths entries must be >= 1");

    require(c.head_threshold >= c.tail_threshold,
            "head_threshold must be >= tail_threshold");
    require(c.tail_threshold >= 0, "tail_threshold must be >= 0");
    require(!c.out.empty(), "out must not be empty");
}

void apply_lines(KeyTable& table, const std::string& text,
                 const std::string& source,
                 std::vector<std::string>& problems) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') continue;  // cosmetic
        const std::size_t eq = line.find('=');
        const std::string where = source + ":" + std::to_string(lineno);
        if (eq == std::string::npos) {
            problems.push_back(where + ": expected key=value, got '" + line + "'");
            continue;
        }
        table.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
    }
}

ExperimentConfig parse_impl(const std::string& text, bool have_file,
                            const std::string& source,
                            const std::vector<std::string>& overrides) {
    ExperimentConfig c;
    std::vector<std::string> problems;
    KeyTable table = make_table(c, problems);

    if (have_file) apply_lines(table, text, source, problems);
    for (const std::string& item : overrides) {
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos) {
            problems.push_back("override '" + item + "': expected key=value");
            continue;
        }
        table.apply(trim(item.substr(0, eq)), trim(item.substr(eq + 1)),
                    "override");
    }

    validate(c, problems);
    if (!problems.empty()) throw ConfigError(problems);
    return c;
}

}  // namespace

ConfigError::ConfigError(const std::vector<std::string>& problems)
    : std::runtime_error([&problems] {
          std::string msg = "invalid configuration:";
          for (const std::string& p : problems) msg += "\n  - " + p;
          return msg;
      }()),
      problems_(problems) {}

ExperimentConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides) {
    std::string text;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError({"cannot open config file " + path});
        text.assign(std::istreambuf_iterator<char>(in),
                    std::istreambuf_iterator<char>());
    }
    return parse_impl(text, !path.empty(), path, overrides);
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides) {
    return parse_impl(text, true, "config", overrides);
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "dataset = "
       << (c.dataset == DatasetKind::kSynthetic ? "synthetic" : "cifar10")
       << "\n";
    os << "data_path = " << c.data_path << "\n";
    os << "eval_path = " << c.eval_path << "\n";
    os << "num_classes = " << c.num_classes << "\n";
    os << "input_dim = " << c.input_dim << "\n";
    os << "n_max = " << c.n_max << "\n";
    os << "imbalance_factor = " << format_double(c.imbalance_factor) << "\n";
    os << "class_spread = " << format_double(c.class_spread) << "\n";
    os << "test_per_class = " << c.test_per_class << "\n";
    os << "num_clients = " << c.num_clients << "\n";
    os << "dirichlet_alpha = " << format_double(c.dirichlet_alpha) << "\n";
    os << "num_rounds = " << c.num_rounds << "\n";
    os << "online_rate = " << format_double(c.online_rate) << "\n";
    os << "local_epochs = " << c.local_epochs << "\n";
    os << "batch_size = " << c.batch_size << "\n";
    os << "learning_rate = " << format_double(c.learning_rate) << "\n";
    switch (c.method) {
        case Method::kFedAvg: os << "method = fedavg\n"; break;
        case Method::kFedProx: os << "method = fedprox\n"; break;
        case Method::kFocal: os << "method = focal\n"; break;
        case Method::kFedLf: os << "method = fedlf\n"; break;
    }
    os << "focal_gamma = " << format_double(c.focal_gamma) << "\n";
    os << "prox_mu = " << format_double(c.prox_mu) << "\n";
    os << "lambda = " << format_double(c.lambda) << "\n";
    os << "gamma = " << format_double(c.gamma) << "\n";
    os << "smoothing_factor = " << format_double(c.smoothing_factor) << "\n";
    os << "tau = " << format_double(c.tau) << "\n";
    os << "decorrelation_exclude_diagonal = "
       << (c.decorrelation_exclude_diagonal ? "true" : "false") << "\n";
    os << "hidden_widths = ";
    for (std::size_t i = 0; i < c.hidden_widths.size(); ++i) {
        if (i) os << ",";
        os << c.hidden_widths[i];
    }
    os << "\n";
    os << "feature_dim = " << c.feature_dim << "\n";
    os << "activation = "
       << (c.activation == Activation::kRelu ? "relu" : "tanh") << "\n";
    os << "head_threshold = " << c.head_threshold << "\n";
    os << "tail_threshold = " << c.tail_threshold << "\n";
    os << "seed = " << c.seed << "\n";
    os << "out = " << c.out << "\n";
    os << "format = " << (c.format == ReportFormat::kCsv ? "csv" : "jsonl")
       << "\n";
    os << "checkpoint = " << c.checkpoint << "\n";
    return os.str();
}

FLConfig to_fl_config(const ExperimentConfig& c) {
    FLConfig fl;
    fl.num_rounds = c.num_rounds;
    fl.num_clients = c.num_clients;
    fl.online_rate = c.online_rate;
    fl.local_epochs = c.local_epochs;
    fl.batch_size = c.batch_size;
    fl.learning_rate = c.learning_rate;
    fl.method.method = c.method;
    fl.method.focal_gamma = c.focal_gamma;
    fl.method.prox_mu = c.prox_mu;
    fl.loss.smoothing_factor = c.smoothing_factor;
    fl.loss.tau = c.tau;
    fl.loss.lambda = c.lambda;
    fl.loss.gamma = c.gamma;
    fl.loss.decorrelation_exclude_diagonal = c.decorrelation_exclude_diagonal;
    fl.arch.input_dim = c.input_dim;
    fl.arch.hidden_widths = c.hidden_widths;
    fl.arch.feature_dim = c.feature_dim;
    fl.arch.num_classes = c.num_classes;
    fl.arch.activation = c.activation;
    fl.seed = c.seed;
    return fl;
}

std::string checkpoint_path(const ExperimentConfig& c) {
    if (!c.checkpoint.empty()) return c.checkpoint;
    const std::size_t dot = c.out.find_last_of('.');
    const std::size_t slash = c.out.find_last_of('/');
    if (dot != std::string::npos &&
        (slash == std::string::npos || dot > slash))
        return c.out.substr(0, dot) + ".ckpt";
    return c.out + ".ckpt";
}

}  // namespace fedlf
