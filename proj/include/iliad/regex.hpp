#pragma once

// The word-modification DSL: fixed-width patterns of the form
// "^?(PRE)(TARGET)(POST)$?@REPLACEMENT". Each atom matches exactly one
// character (literal, class, negated class, or wildcard), so matches have a
// fixed width and no backtracking is needed. Substitution scans left to
// right, non-overlapping; the matched context groups are re-emitted around
// the replacement, and an empty-width match advances one character.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace iliad::regex {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at position " + std::to_string(position)),
          position(position) {}
    std::size_t position;
};

struct Atom {
    enum class Kind { Literal, Class, NegatedClass, Wildcard };
    Kind kind = Kind::Literal;
    std::string chars;  // literal char or class members

    bool matches(char c) const {
        switch (kind) {
            case Kind::Literal: return chars[0] == c;
            case Kind::Class: return chars.find(c) != std::string::npos;
            case Kind::NegatedClass: return chars.find(c) == std::string::npos;
            case Kind::Wildcard: return true;
        }
        return false;
    }

    std::string surface() const {
        switch (kind) {
            case Kind::Literal: return chars;
            case Kind::Class: return "[" + chars + "]";
            case Kind::NegatedClass: return "[^" + chars + "]";
            case Kind::Wildcard: return ".";
        }
        return {};
    }
};

struct RegexProgram {
    bool start_anchor = false;
    bool end_anchor = false;
    std::vector<Atom> pre, target, post;
    std::string replacement;

    std::size_t match_width() const { return pre.size() + target.size() + post.size(); }

    std::string surface() const {
        std::string s;
        if (start_anchor) s += '^';
        for (const auto* group : {&pre, &target, &post}) {
            s += '(';
            for (const auto& atom : *group) s += atom.surface();
            s += ')';
        }
        if (end_anchor) s += '$';
        s += '@';
        s += replacement;
        return s;
    }
};

namespace detail {

inline bool is_literal_char(char c) { return c >= 'a' && c <= 'z'; }

inline std::vector<Atom> parse_group(std::string_view text, std::size_t& i) {
    if (i >= text.size() || text[i] != '(') throw ParseError("expected '('", i);
    ++i;
    std::vector<Atom> atoms;
    while (i < text.size() && text[i] != ')') {
        const char c = text[i];
        if (c == '.') {
            atoms.push_back({Atom::Kind::Wildcard, {}});
            ++i;
        } else if (c == '[') {
            const std::size_t open = i;
            ++i;
            Atom atom;
            atom.kind = Atom::Kind::Class;
            if (i < text.size() && text[i] == '^') {
                atom.kind = Atom::Kind::NegatedClass;
                ++i;
            }
            while (i < text.size() && text[i] != ']') {
                if (!is_literal_char(text[i]))
                    throw ParseError("invalid character class member", i);
                atom.chars += text[i];
                ++i;
            }
            if (i >= text.size()) throw ParseError("unterminated character class", open);
            if (atom.chars.empty()) throw ParseError("empty character class", open);
            ++i;  // consume ']'
            atoms.push_back(std::move(atom));
        } else if (is_literal_char(c)) {
            atoms.push_back({Atom::Kind::Literal, std::string(1, c)});
            ++i;
        } else {
            throw ParseError("stray metacharacter in group", i);
        }
    }
    if (i >= text.size()) throw ParseError("unterminated group", text.size());
    ++i;  // consume ')'
    return atoms;
}

}  // namespace detail

// Parses "pattern@replace". Errors carry the offending position.
inline RegexProgram parse_regex(std::string_view text) {
    const std::size_t at = text.find('@');
    if (at == std::string_view::npos) throw ParseError("missing '@' separator", text.size());
    if (text.find('@', at + 1) != std::string_view::npos)
        throw ParseError("multiple '@' separators", text.find('@', at + 1));

    RegexProgram prog;
    std::size_t i = 0;
    if (i < at && text[i] == '^') {
        prog.start_anchor = true;
        ++i;
    }
    prog.pre = detail::parse_group(text, i);
    prog.target = detail::parse_group(text, i);
    prog.post = detail::parse_group(text, i);
    if (i < at && text[i] == '$') {
        prog.end_anchor = true;
        ++i;
    }
    if (i != at) throw ParseError("unexpected trailing pattern text", i);

    for (std::size_t r = at + 1; r < text.size(); ++r)
        if (!detail::is_literal_char(text[r]))
            throw ParseError("replacement must be literal characters", r);
    prog.replacement = std::string(text.substr(at + 1));

    if (prog.target.empty() && prog.pre.empty() && prog.post.empty() && !prog.start_anchor &&
        !prog.end_anchor)
        throw ParseError("pattern matches nothing anywhere (empty groups, no anchors)", 0);
    return prog;
}

namespace detail {

inline bool match_at(const RegexProgram& p, std::string_view word, std::size_t pos) {
    const std::size_t w = p.match_width();
    if (pos + w > word.size()) return false;
    if (p.start_anchor && pos != 0) return false;
    if (p.end_anchor && pos + w != word.size()) return false;
    std::size_t i = pos;
    for (const auto* group : {&p.pre, &p.target, &p.post})
        for (const auto& atom : *group)
            if (!atom.matches(word[i++])) return false;
    return true;
}

}  // namespace detail

// Applies the program to a word: leftmost, non-overlapping, global scan.
// The matched span is rewritten as pre-text + replacement + post-text; an
// empty-width match emits the replacement and then advances one character.
inline std::string compile_apply(const RegexProgram& p, std::string_view word) {
    const std::size_t w = p.match_width();
    std::string out;
    std::size_t pos = 0;
    while (pos <= word.size()) {
        if (detail::match_at(p, word, pos)) {
            out.append(word.substr(pos, p.pre.size()));
            out += p.replacement;
            out.append(word.substr(pos + p.pre.size() + p.target.size(), p.post.size()));
            if (w > 0) {
                pos += w;
                continue;
            }
        }
        if (pos < word.size()) out += word[pos];
        ++pos;
    }
    return out;
}

inline std::string compile_apply(std::string_view program_text, std::string_view word) {
    return compile_apply(parse_regex(program_text), word);
}

}  // namespace iliad::regex
