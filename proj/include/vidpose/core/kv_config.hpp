#pragma once

// Minimal reader for the TOML-style key/value files used for pipeline and
// scene configuration. Supported: `key = value` with numbers, booleans,
// quoted strings and flat arrays; `[section]` headers (keys become
// "section.key"); `[[name]]` array-of-tables; `#` comments.

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vidpose/core/errors.hpp"

namespace vidpose {

struct KvValue {
    enum class Kind { Bool, Number, String, List } kind = Kind::Number;
    bool boolean = false;
    double number = 0.0;
    std::string text;
    std::vector<KvValue> list;
};

class KvTable {
public:
    void set(const std::string& key, KvValue v) { values_[key] = std::move(v); }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, KvValue>& values() const { return values_; }

    double get_number(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second.kind != KvValue::Kind::Number) throw ConfigError(key, "expected a number");
        return it->second.number;
    }
    int get_int(const std::string& key, int fallback) const {
        const double v = get_number(key, fallback);
        if (v != static_cast<double>(static_cast<long long>(v))) throw ConfigError(key, "expected an integer");
        return static_cast<int>(v);
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second.kind != KvValue::Kind::Bool) throw ConfigError(key, "expected true or false");
        return it->second.boolean;
    }
    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second.kind != KvValue::Kind::String) throw ConfigError(key, "expected a quoted string");
        return it->second.text;
    }
    std::vector<double> get_numbers(const std::string& key, std::vector<double> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second.kind != KvValue::Kind::List) throw ConfigError(key, "expected an array");
        std::vector<double> out;
        for (const auto& v : it->second.list) {
            if (v.kind != KvValue::Kind::Number) throw ConfigError(key, "expected an array of numbers");
            out.push_back(v.number);
        }
        return out;
    }
    std::vector<std::string> get_strings(const std::string& key, std::vector<std::string> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second.kind != KvValue::Kind::List) throw ConfigError(key, "expected an array");
        std::vector<std::string> out;
        for (const auto& v : it->second.list) {
            if (v.kind != KvValue::Kind::String) throw ConfigError(key, "expected an array of strings");
            out.push_back(v.text);
        }
        return out;
    }

private:
    std::map<std::string, KvValue> values_;
};

struct KvDocument {
    KvTable root;
    std::map<std::string, std::vector<KvTable>> table_arrays;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

inline std::optional<KvValue> parse_scalar(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    KvValue v;
    if (s == "true" || s == "false") {
        v.kind = KvValue::Kind::Bool;
        v.boolean = s == "true";
        return v;
    }
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        v.kind = KvValue::Kind::String;
        v.text = s.substr(1, s.size() - 2);
        return v;
    }
    double d = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    v.kind = KvValue::Kind::Number;
    v.number = d;
    return v;
}

inline std::optional<KvValue> parse_value(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.size() >= 2 && s.front() == '[' && s.back() == ']') {
        KvValue v;
        v.kind = KvValue::Kind::List;
        std::string body = s.substr(1, s.size() - 2);
        std::string item;
        bool in_str = false;
        for (char c : body) {
            if (c == '"') in_str = !in_str;
            if (c == ',' && !in_str) {
                if (!trim(item).empty()) {
                    auto e = parse_scalar(item);
                    if (!e) return std::nullopt;
                    v.list.push_back(*e);
                }
                item.clear();
            } else {
                item += c;
            }
        }
        if (!trim(item).empty()) {
            auto e = parse_scalar(item);
            if (!e) return std::nullopt;
            v.list.push_back(*e);
        }
        return v;
    }
    return parse_scalar(s);
}

}  // namespace detail

inline KvDocument parse_kv(std::istream& in, const std::string& name = "<config>") {
    KvDocument doc;
    KvTable* current = &doc.root;
    std::string prefix;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = detail::trim(detail::strip_comment(line));
        if (s.empty()) continue;
        if (s.rfind("[[", 0) == 0) {
            if (s.size() < 5 || s.substr(s.size() - 2) != "]]") throw ParseError(name, lineno, "malformed table-array header");
            auto& arr = doc.table_arrays[detail::trim(s.substr(2, s.size() - 4))];
            arr.emplace_back();
            current = &arr.back();
            prefix.clear();
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError(name, lineno, "malformed section header");
            current = &doc.root;
            prefix = detail::trim(s.substr(1, s.size() - 2)) + ".";
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(name, lineno, "expected key = value");
        const std::string key = detail::trim(s.substr(0, eq));
        if (key.empty()) throw ParseError(name, lineno, "empty key");
        auto v = detail::parse_value(s.substr(eq + 1));
        if (!v) throw ParseError(name, lineno, "cannot parse value for '" + key + "'");
        current->set(prefix + key, *v);
    }
    return doc;
}

inline KvDocument parse_kv_string(const std::string& text, const std::string& name = "<string>") {
    std::istringstream in(text);
    return parse_kv(in, name);
}

inline KvDocument load_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    return parse_kv(in, path);
}

}  // namespace vidpose
