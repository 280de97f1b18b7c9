#pragma once

// JSON interchange for all machine kinds. Complex numbers serialize as
// [re, im]; parse(serialize(x)) is structurally exact because doubles are
// rendered with max_digits10 precision.

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "qag/bilinear.hpp"
#include "qag/qpda.hpp"

namespace qag {

using Machine = std::variant<Qfa, QuantumGrammar, Qpda, Dfa>;

namespace jio {

using nlohmann::json;

inline json to_json(const Complex& c) { return json::array({c.real(), c.imag()}); }

inline Complex complex_from(const json& j, const std::string& where) {
    if (j.is_number()) return Complex(j.get<double>(), 0.0);
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(where + ": expected [re, im]");
    return Complex(j[0].get<double>(), j[1].get<double>());
}

inline json to_json(const CVec& v) {
    json a = json::array();
    for (const auto& c : v) a.push_back(to_json(c));
    return a;
}

inline CVec cvec_from(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected an array");
    CVec v;
    for (std::size_t i = 0; i < j.size(); ++i)
        v.push_back(complex_from(j[i], where + "/" + std::to_string(i)));
    return v;
}

inline json to_json(const CMat& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(to_json(m.at(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CMat cmat_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a matrix");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    CMat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw ParseError(where + ": ragged matrix at row " + std::to_string(i));
        for (std::size_t k = 0; k < cols; ++k)
            m.at(i, k) = complex_from(j[i][k], where + "/" + std::to_string(i) + "/" + std::to_string(k));
    }
    return m;
}

template <typename T>
inline T field(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(where + "/" + key + ": wrong type");
    }
}

inline void reject_reserved(const std::vector<Symbol>& alphabet, const std::string& where) {
    for (const auto& s : alphabet)
        if (s == "_") throw ParseError(where + ": stack symbol '_' is reserved");
}

// ---- qfa ----

inline json qfa_to_json(const Qfa& q) {
    json j;
    j["type"] = "qfa";
    j["alphabet"] = q.alphabet;
    j["dim"] = q.dim;
    j["generalized"] = q.generalized;
    j["initial"] = to_json(q.init);
    json tr = json::object();
    for (const auto& [a, m] : q.transitions) tr[a] = to_json(m);
    j["transitions"] = std::move(tr);
    json acc = json::array();
    for (const auto& h : q.accept.vectors) acc.push_back(to_json(h));
    j["accept_basis"] = std::move(acc);
    return j;
}

inline Qfa qfa_from_json(const json& j) {
    Qfa q;
    q.alphabet = field<std::vector<std::string>>(j, "alphabet", "/qfa");
    q.dim = field<std::size_t>(j, "dim", "/qfa");
    q.generalized = j.value("generalized", false);
    q.init = cvec_from(j.contains("initial") ? j.at("initial") : json(), "/qfa/initial");
    if (!j.contains("transitions") || !j.at("transitions").is_object())
        throw ParseError("/qfa/transitions: expected an object");
    for (const auto& [a, m] : j.at("transitions").items())
        q.transitions[a] = cmat_from(m, "/qfa/transitions/" + a);
    q.accept.ambient_dim = q.dim;
    if (!j.contains("accept_basis") || !j.at("accept_basis").is_array())
        throw ParseError("/qfa/accept_basis: expected an array");
    for (std::size_t i = 0; i < j.at("accept_basis").size(); ++i)
        q.accept.vectors.push_back(
            cvec_from(j.at("accept_basis")[i], "/qfa/accept_basis/" + std::to_string(i)));
    try {
        q.validate();
    } catch (const Error& e) {
        throw ParseError(std::string("/qfa: ") + e.what());
    }
    return q;
}

// ---- dfa ----

inline json dfa_to_json(const Dfa& d) {
    json j;
    j["type"] = "dfa";
    j["states"] = d.states;
    j["alphabet"] = d.alphabet;
    j["initial"] = d.init;
    j["accepting"] = std::vector<std::string>(d.accepting.begin(), d.accepting.end());
    json delta = json::object();
    for (const auto& s : d.states) {
        json row = json::object();
        for (const auto& a : d.alphabet) row[a] = d.delta.at({s, a});
        delta[s] = std::move(row);
    }
    j["delta"] = std::move(delta);
    return j;
}

inline Dfa dfa_from_json(const json& j) {
    Dfa d;
    d.states = field<std::vector<std::string>>(j, "states", "/dfa");
    d.alphabet = field<std::vector<std::string>>(j, "alphabet", "/dfa");
    d.init = field<std::string>(j, "initial", "/dfa");
    for (const auto& s : field<std::vector<std::string>>(j, "accepting", "/dfa"))
        d.accepting.insert(s);
    if (!j.contains("delta") || !j.at("delta").is_object())
        throw ParseError("/dfa/delta: expected an object");
    for (const auto& s : d.states) {
        if (!j.at("delta").contains(s)) throw ParseError("/dfa/delta/" + s + ": missing row");
        for (const auto& a : d.alphabet)
            d.delta[{s, a}] = field<std::string>(j.at("delta").at(s), a, "/dfa/delta/" + s);
    }
    try {
        d.validate();
    } catch (const Error& e) {
        throw ParseError(std::string("/dfa: ") + e.what());
    }
    return d;
}

// ---- grammar ----

inline json grammar_to_json(const QuantumGrammar& g) {
    json j;
    j["type"] = "grammar";
    j["variables"] = g.variables;
    j["terminals"] = g.terminals;
    j["initial"] = g.initial;
    j["dimension"] = g.dimension;
    json prods = json::array();
    for (const auto& p : g.productions) {
        json pj;
        pj["lhs"] = p.lhs;
        pj["rhs"] = p.rhs;
        pj["amplitudes"] = to_json(p.amps);
        prods.push_back(std::move(pj));
    }
    j["productions"] = std::move(prods);
    return j;
}

inline QuantumGrammar grammar_from_json(const json& j) {
    QuantumGrammar g;
    g.variables = field<std::vector<std::string>>(j, "variables", "/grammar");
    g.terminals = field<std::vector<std::string>>(j, "terminals", "/grammar");
    g.initial = field<std::string>(j, "initial", "/grammar");
    g.dimension = field<std::size_t>(j, "dimension", "/grammar");
    if (!j.contains("productions") || !j.at("productions").is_array())
        throw ParseError("/grammar/productions: expected an array");
    for (std::size_t i = 0; i < j.at("productions").size(); ++i) {
        const json& pj = j.at("productions")[i];
        const std::string where = "/grammar/productions/" + std::to_string(i);
        Production p;
        p.lhs = field<std::string>(pj, "lhs", where);
        p.rhs = field<std::vector<std::string>>(pj, "rhs", where);
        if (!pj.contains("amplitudes")) throw ParseError(where + ": missing field 'amplitudes'");
        p.amps = cvec_from(pj.at("amplitudes"), where + "/amplitudes");
        g.productions.push_back(std::move(p));
    }
    try {
        g.validate();
    } catch (const Error& e) {
        throw ParseError(std::string("/grammar: ") + e.what());
    }
    return g;
}

// ---- qpda ----

inline json action_to_json(const StackAction& a) {
    switch (a.kind) {
    case ActionKind::push:
        return json{{"push", a.word[0]}};
    case ActionKind::push_word:
        return json{{"push_word", a.word}};
    case ActionKind::pop:
        return json("pop");
    case ActionKind::stay:
        break;
    }
    return json("stay");
}

inline StackAction action_from_json(const json& j, const std::string& where) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "pop") return StackAction::Pop();
        if (s == "stay") return StackAction::Stay();
        throw ParseError(where + ": unknown action '" + s + "'");
    }
    if (j.is_object() && j.contains("push"))
        return StackAction::Push(field<std::string>(j, "push", where));
    if (j.is_object() && j.contains("push_word"))
        return StackAction::PushWord(field<std::vector<std::string>>(j, "push_word", where));
    throw ParseError(where + ": expected \"pop\", \"stay\", {\"push\": …} or {\"push_word\": …}");
}

inline json qpda_to_json(const Qpda& p) {
    json j;
    j["type"] = "qpda";
    j["controls"] = p.controls;
    j["input_alphabet"] = p.input_alphabet;
    j["stack_alphabet"] = p.stack_alphabet;
    j["acceptance"] =
        p.acceptance == QpdaAcceptance::empty_stack_and_control ? "empty_stack_and_control"
                                                                : "control_only";
    j["unitary"] = p.unitary_claimed;
    j["pushes_words"] = p.pushes_words;
    json init = json::array();
    for (const auto& [cfg, amp] : p.init) {
        json e;
        e["control"] = cfg.control;
        e["stack"] = cfg.stack;
        e["amplitude"] = to_json(amp);
        init.push_back(std::move(e));
    }
    j["initial"] = std::move(init);
    bool plain_controls = true;
    std::vector<std::string> names;
    try {
        names = p.accept_control_names();
    } catch (const ModeError&) {
        plain_controls = false;
    }
    if (plain_controls) {
        j["accept_controls"] = names;
    } else {
        json acc = json::array();
        for (const auto& v : p.accept_vectors) acc.push_back(to_json(v));
        j["accept_vectors"] = std::move(acc);
    }
    json tr = json::object();
    for (const auto& [a, rules] : p.transitions) {
        json list = json::array();
        for (const auto& r : rules) {
            json rj;
            rj["from"] = r.from;
            rj["top"] = r.top;
            rj["action"] = action_to_json(r.action);
            if (r.action.kind == ActionKind::pop) rj["below"] = r.below;
            rj["to"] = r.to;
            rj["amplitude"] = to_json(r.amp);
            list.push_back(std::move(rj));
        }
        tr[a] = std::move(list);
    }
    j["transitions"] = std::move(tr);
    return j;
}

inline Qpda qpda_from_json(const json& j) {
    Qpda p;
    p.controls = field<std::vector<std::string>>(j, "controls", "/qpda");
    p.input_alphabet = field<std::vector<std::string>>(j, "input_alphabet", "/qpda");
    p.stack_alphabet = field<std::vector<std::string>>(j, "stack_alphabet", "/qpda");
    reject_reserved(p.stack_alphabet, "/qpda/stack_alphabet");
    const std::string mode = j.value("acceptance", "empty_stack_and_control");
    if (mode == "empty_stack_and_control")
        p.acceptance = QpdaAcceptance::empty_stack_and_control;
    else if (mode == "control_only")
        p.acceptance = QpdaAcceptance::control_only;
    else
        throw ParseError("/qpda/acceptance: unknown mode '" + mode + "'");
    p.unitary_claimed = j.value("unitary", false);
    p.pushes_words = j.value("pushes_words", false);
    if (!j.contains("initial") || !j.at("initial").is_array())
        throw ParseError("/qpda/initial: expected an array");
    for (std::size_t i = 0; i < j.at("initial").size(); ++i) {
        const json& e = j.at("initial")[i];
        const std::string where = "/qpda/initial/" + std::to_string(i);
        Config cfg{field<std::string>(e, "control", where),
                   field<std::vector<std::string>>(e, "stack", where)};
        if (!e.contains("amplitude")) throw ParseError(where + ": missing field 'amplitude'");
        p.init[cfg] += complex_from(e.at("amplitude"), where + "/amplitude");
    }
    if (j.contains("accept_controls")) {
        p.set_accept_controls(field<std::vector<std::string>>(j, "accept_controls", "/qpda"));
    } else if (j.contains("accept_vectors")) {
        for (std::size_t i = 0; i < j.at("accept_vectors").size(); ++i)
            p.accept_vectors.push_back(
                cvec_from(j.at("accept_vectors")[i], "/qpda/accept_vectors/" + std::to_string(i)));
    } else {
        throw ParseError("/qpda: missing accept_controls or accept_vectors");
    }
    if (j.contains("transitions")) {
        if (!j.at("transitions").is_object()) throw ParseError("/qpda/transitions: expected an object");
        for (const auto& [a, list] : j.at("transitions").items()) {
            if (!list.is_array()) throw ParseError("/qpda/transitions/" + a + ": expected an array");
            for (std::size_t i = 0; i < list.size(); ++i) {
                const json& rj = list[i];
                const std::string where = "/qpda/transitions/" + a + "/" + std::to_string(i);
                QpdaRule r;
                r.from = field<std::string>(rj, "from", where);
                r.top = field<std::string>(rj, "top", where);
                if (!rj.contains("action")) throw ParseError(where + ": missing field 'action'");
                r.action = action_from_json(rj.at("action"), where + "/action");
                r.below = r.action.kind == ActionKind::pop ? rj.value("below", kBelowAny) : kBelowAny;
                r.to = field<std::string>(rj, "to", where);
                if (!rj.contains("amplitude")) throw ParseError(where + ": missing field 'amplitude'");
                r.amp = complex_from(rj.at("amplitude"), where + "/amplitude");
                p.transitions[a].push_back(std::move(r));
            }
        }
    }
    try {
        p.validate();
    } catch (const Error& e) {
        throw ParseError(std::string("/qpda: ") + e.what());
    }
    return p;
}

// ---- bilinear (serialize-only, produced by convert) ----

inline json bilinear_to_json(const BilinearForm& b) {
    json j;
    j["type"] = "bilinear";
    j["kind"] = b.kind == FormKind::complex_form ? "complex" : "real";
    j["dim"] = b.dim;
    j["pi"] = to_json(b.pi);
    j["eta"] = to_json(b.eta);
    json tr = json::object();
    for (const auto& [a, m] : b.matrices) tr[a] = to_json(m);
    j["matrices"] = std::move(tr);
    return j;
}

} // namespace jio

inline Machine parse_machine_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    const std::string type = jio::field<std::string>(j, "type", "/");
    if (type == "qfa") return jio::qfa_from_json(j);
    if (type == "grammar") return jio::grammar_from_json(j);
    if (type == "qpda") return jio::qpda_from_json(j);
    if (type == "dfa") return jio::dfa_from_json(j);
    throw ParseError("/type: unknown machine type '" + type + "'");
}

inline Machine parse_machine_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_machine_text(buf.str());
}

inline std::string serialize_machine(const Machine& m) {
    nlohmann::json j = std::visit(
        [](const auto& v) -> nlohmann::json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Qfa>) return jio::qfa_to_json(v);
            else if constexpr (std::is_same_v<T, QuantumGrammar>) return jio::grammar_to_json(v);
            else if constexpr (std::is_same_v<T, Qpda>) return jio::qpda_to_json(v);
            else return jio::dfa_to_json(v);
        },
        m);
    return j.dump(2) + "\n";
}

} // namespace qag
