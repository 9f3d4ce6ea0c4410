#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace regret {

/// Shortest decimal with 17 significant digits: round-trips any double.
inline std::string format_sig17(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
}

namespace detail {
inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}
} // namespace detail

/**
 * Minimal JSON emitter for flat report objects.  Fields appear in insertion
 * order and doubles are printed with 17 significant digits, so identical
 * runs produce byte-identical artifacts.
 */
class JsonWriter {
public:
    JsonWriter& field(const std::string& key, double v) { return raw(key, format_sig17(v)); }
    JsonWriter& field(const std::string& key, int v) { return raw(key, std::to_string(v)); }
    JsonWriter& field(const std::string& key, long v) { return raw(key, std::to_string(v)); }
    JsonWriter& field(const std::string& key, long long v) { return raw(key, std::to_string(v)); }
    JsonWriter& field(const std::string& key, unsigned long long v) { return raw(key, std::to_string(v)); }
    JsonWriter& field(const std::string& key, bool v) { return raw(key, v ? "true" : "false"); }
    JsonWriter& field(const std::string& key, const std::string& v) {
        return raw(key, "\"" + detail::json_escape(v) + "\"");
    }
    JsonWriter& field(const std::string& key, const char* v) {
        return field(key, std::string(v));
    }
    JsonWriter& field(const std::string& key, const std::vector<double>& v) {
        std::string arr = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) arr += ", ";
            arr += format_sig17(v[i]);
        }
        arr += "]";
        return raw(key, arr);
    }

    /// Insert a pre-serialized JSON value (nested object or array).
    JsonWriter& raw(const std::string& key, const std::string& json_value) {
        if (!body_.empty()) body_ += ",\n";
        body_ += "  \"" + detail::json_escape(key) + "\": " + json_value;
        return *this;
    }

    std::string str() const { return "{\n" + body_ + "\n}\n"; }

private:
    std::string body_;
};

} // namespace regret
