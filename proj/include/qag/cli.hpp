#pragma once

// Command-line front end: evaluation, coefficient series, pumping, format
// conversion, structural checks, closure operations, and bundled demos.

#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qag/json_io.hpp"
#include "qag/machines.hpp"
#include "qag/series.hpp"

namespace qag {

namespace cli_detail {

inline Word split_word(const std::string& text, const std::string& sep) {
    if (text.empty()) return {};
    if (sep.empty()) return word_from_chars(text);
    Word w;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = text.find(sep, pos);
        if (next == std::string::npos) {
            w.push_back(text.substr(pos));
            break;
        }
        w.push_back(text.substr(pos, next - pos));
        pos = next + sep.size();
    }
    return w;
}

inline Complex parse_complex(const std::string& s) {
    std::istringstream in(s);
    double re = 0.0, im = 0.0;
    char comma = 0;
    if (!(in >> re)) throw ParseError("bad complex number: " + s);
    if (in >> comma) {
        if (comma != ',' || !(in >> im)) throw ParseError("bad complex number: " + s);
    }
    return {re, im};
}

inline std::string fmt_prob(double p) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(12) << p;
    return s.str();
}

inline std::string fmt_coeff(const Complex& c) {
    std::ostringstream s;
    s << std::setprecision(12);
    if (std::abs(c.imag()) < 1e-12) {
        s << c.real();
    } else {
        s << c.real() << (c.imag() < 0 ? "" : "+") << c.imag() << "i";
    }
    return s.str();
}

inline double eval_machine(const Machine& m, const Word& w) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Qfa>) return accept_probability(v, w);
            else if constexpr (std::is_same_v<T, QuantumGrammar>) return f_of_word(v, w);
            else if constexpr (std::is_same_v<T, Qpda>) return qpda_accept_probability(v, w);
            else return dfa_accepts(v, w) ? 1.0 : 0.0;
        },
        m);
}

inline std::vector<Symbol> machine_alphabet(const Machine& m) {
    return std::visit(
        [](const auto& v) -> std::vector<Symbol> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Qfa>) return v.alphabet;
            else if constexpr (std::is_same_v<T, QuantumGrammar>) return v.terminals;
            else if constexpr (std::is_same_v<T, Qpda>) return v.input_alphabet;
            else return v.alphabet;
        },
        m);
}

inline TruncatedSeries enumerate_coefficients(const Machine& m, std::size_t max_len) {
    const std::vector<Symbol> alphabet = machine_alphabet(m);
    double count = 1.0;
    for (std::size_t i = 0; i < max_len; ++i) count *= static_cast<double>(alphabet.size());
    if (count > 1e7) throw ScaleError("coeffs: |A|^max_len exceeds 1e7");
    TruncatedSeries s;
    std::vector<Word> words{{}};
    for (std::size_t n = 0; n <= max_len; ++n) {
        double total = 0.0;
        for (const auto& w : words) total += eval_machine(m, w);
        s.coeff.push_back(total);
        if (n == max_len) break;
        std::vector<Word> next;
        next.reserve(words.size() * alphabet.size());
        for (const auto& w : words)
            for (const auto& a : alphabet) {
                Word e = w;
                e.push_back(a);
                next.push_back(std::move(e));
            }
        words = std::move(next);
    }
    return s;
}

} // namespace cli_detail

inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"quantum automata and grammars toolkit"};
    app.require_subcommand(1);

    std::string file, word_text, sep, method, to, map_text, demo_name;
    std::string weight_a = "0.7071067811865476", weight_b = "0.7071067811865476";
    std::vector<std::string> files;
    std::size_t max_len = 8, dim_index = 0, depth = 4;
    double eps = 0.5;
    bool real_form = false;
    std::string closure_op;

    auto* prob = app.add_subcommand("prob", "acceptance probability of a word");
    prob->add_option("file", file)->required();
    prob->add_option("word", word_text);
    prob->add_option("--sep", sep);

    auto* coeffs = app.add_subcommand("coeffs", "length-indexed coefficient series");
    coeffs->add_option("file", file)->required();
    coeffs->add_option("--max-len", max_len);
    coeffs->add_option("--method", method)->check(CLI::IsMember({"bilinear", "enumerate", "fixpoint"}));
    coeffs->add_option("--dim", dim_index);

    auto* pump = app.add_subcommand("pump", "pumping constant for a word");
    pump->add_option("file", file)->required();
    pump->add_option("--word", word_text)->required();
    pump->add_option("--eps", eps)->required();
    pump->add_option("--sep", sep);

    auto* convert = app.add_subcommand("convert", "convert between machine forms");
    convert->add_option("file", file)->required();
    convert->add_option("--to", to)
        ->required()
        ->check(CLI::IsMember({"gnf", "chomsky", "qpda", "grammar", "bilinear", "qfa"}));
    convert->add_flag("--real", real_form);

    auto* check = app.add_subcommand("check", "structural and unitarity reports");
    check->add_option("file", file)->required();
    check->add_option("--depth", depth);

    auto* closure = app.add_subcommand("closure", "combine machines");
    closure->add_option("--op", closure_op)
        ->required()
        ->check(CLI::IsMember({"sum", "tensor", "complement", "invhom", "symdiff", "threeway"}));
    closure->add_option("--a", weight_a);
    closure->add_option("--b", weight_b);
    closure->add_option("--map", map_text);
    closure->add_option("files", files);

    auto* demo = app.add_subcommand("demo", "built-in examples with golden values");
    demo->add_option("name", demo_name)
        ->required()
        ->check(CLI::IsMember({"fibonacci", "measurement", "dyck", "leq", "symdiff"}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) { // --help
            out << app.help();
            return 0;
        }
        err << e.what() << "\n";
        return 2;
    }

    try {
        if (prob->parsed()) {
            const Machine m = parse_machine_file(file);
            out << cli_detail::fmt_prob(cli_detail::eval_machine(m, cli_detail::split_word(word_text, sep)))
                << "\n";
            return 0;
        }
        if (coeffs->parsed()) {
            const Machine m = parse_machine_file(file);
            if (method.empty())
                method = std::holds_alternative<Qfa>(m)            ? "bilinear"
                         : std::holds_alternative<QuantumGrammar>(m) ? "fixpoint"
                                                                     : "enumerate";
            TruncatedSeries s;
            if (method == "bilinear") {
                if (!std::holds_alternative<Qfa>(m))
                    throw ModeError("coeffs: --method bilinear requires a qfa");
                s = qfa_length_coefficients(std::get<Qfa>(m), max_len);
            } else if (method == "fixpoint") {
                if (!std::holds_alternative<QuantumGrammar>(m))
                    throw ModeError("coeffs: --method fixpoint requires a grammar");
                s = grammar_initial_series(std::get<QuantumGrammar>(m), max_len, dim_index);
            } else {
                s = cli_detail::enumerate_coefficients(m, max_len);
            }
            for (std::size_t n = 0; n < s.coeff.size(); ++n)
                out << n << "\t" << cli_detail::fmt_coeff(s.coeff[n]) << "\n";
            return 0;
        }
        if (pump->parsed()) {
            const Machine m = parse_machine_file(file);
            if (!std::holds_alternative<Qfa>(m)) throw ModeError("pump: requires a qfa");
            const Qfa& q = std::get<Qfa>(m);
            const Word w = cli_detail::split_word(word_text, sep);
            const auto k = find_pump(q, w, eps);
            std::vector<std::pair<Word, Word>> samples;
            std::vector<Word> contexts{{}};
            for (const auto& a : q.alphabet) {
                contexts.push_back({a});
                for (const auto& b : q.alphabet) contexts.push_back({a, b});
            }
            for (const auto& u : contexts)
                for (const auto& v : contexts) samples.push_back({u, v});
            out << "k = " << k << "\n";
            out << "verified = " << (verify_pump(q, w, k, eps, samples) ? "true" : "false") << "\n";
            return 0;
        }
        if (convert->parsed()) {
            const Machine m = parse_machine_file(file);
            if (to == "gnf") {
                if (!std::holds_alternative<QuantumGrammar>(m))
                    throw ModeError("convert: --to gnf requires a grammar");
                out << serialize_machine(to_greibach(std::get<QuantumGrammar>(m)));
            } else if (to == "chomsky") {
                if (!std::holds_alternative<QuantumGrammar>(m))
                    throw ModeError("convert: --to chomsky requires a grammar");
                out << serialize_machine(to_chomsky(eliminate_unit_productions(std::get<QuantumGrammar>(m))));
            } else if (to == "qpda") {
                if (!std::holds_alternative<QuantumGrammar>(m))
                    throw ModeError("convert: --to qpda requires a grammar");
                QuantumGrammar g = std::get<QuantumGrammar>(m);
                if (!is_greibach(g)) g = to_greibach(g);
                out << serialize_machine(grammar_to_qpda(g));
            } else if (to == "grammar") {
                if (std::holds_alternative<Qpda>(m)) {
                    Qpda p = std::get<Qpda>(m);
                    if (p.unitary_claimed) p.unitary_claimed = false; // treat as generalized
                    bool below_dep = false;
                    for (const auto& [a, rules] : p.transitions)
                        for (const auto& r : rules)
                            below_dep |= (r.action.kind == ActionKind::pop && r.below != kBelowAny);
                    if (below_dep) p = lemma11_expand(p);
                    out << serialize_machine(qpda_to_grammar(p));
                } else if (std::holds_alternative<Qfa>(m)) {
                    out << serialize_machine(qfa_to_regular_grammar(std::get<Qfa>(m)));
                } else {
                    throw ModeError("convert: --to grammar requires a qpda or qfa");
                }
            } else if (to == "bilinear") {
                if (!std::holds_alternative<Qfa>(m))
                    throw ModeError("convert: --to bilinear requires a qfa");
                BilinearForm b = to_bilinear(std::get<Qfa>(m));
                if (real_form) b = to_real(b);
                out << jio::bilinear_to_json(b).dump(2) << "\n";
            } else { // qfa
                if (std::holds_alternative<QuantumGrammar>(m)) {
                    out << serialize_machine(
                        regular_to_qfa(normalize_regular(std::get<QuantumGrammar>(m))));
                } else if (std::holds_alternative<Dfa>(m)) {
                    out << serialize_machine(embed_dfa(std::get<Dfa>(m)));
                } else {
                    throw ModeError("convert: --to qfa requires a regular grammar or dfa");
                }
            }
            return 0;
        }
        if (check->parsed()) {
            const Machine m = parse_machine_file(file);
            if (std::holds_alternative<Qfa>(m)) {
                const Qfa& q = std::get<Qfa>(m);
                out << "mode = " << (q.generalized ? "generalized" : "unitary") << "\n";
                for (const auto& [a, u] : q.transitions)
                    out << "unitary[" << a << "] = " << (is_unitary(u) ? "true" : "false") << "\n";
                out << "initial_norm = " << cli_detail::fmt_prob(norm2(q.init)) << "\n";
                out << "accept_rank = " << q.accept.vectors.size() << "\n";
            } else if (std::holds_alternative<Qpda>(m)) {
                const auto rep = check_unitarity_truncated(std::get<Qpda>(m), depth);
                out << "interior_unitary = " << (rep.interior_unitary ? "true" : "false") << "\n";
                out << "max_deviation = " << std::setprecision(6) << rep.max_deviation << "\n";
            } else if (std::holds_alternative<QuantumGrammar>(m)) {
                const QuantumGrammar& g = std::get<QuantumGrammar>(m);
                const char* form = "general";
                switch (classify(g)) {
                case GrammarForm::greibach: form = "greibach"; break;
                case GrammarForm::chomsky: form = "chomsky"; break;
                case GrammarForm::regular: form = "regular"; break;
                case GrammarForm::general: break;
                }
                out << "form = " << form << "\n";
                bool terminating = true;
                try {
                    detail::check_termination(g);
                } catch (const GrammarError&) {
                    terminating = false;
                }
                out << "terminating = " << (terminating ? "true" : "false") << "\n";
            } else {
                const Dfa& d = std::get<Dfa>(m);
                out << "states = " << d.states.size() << "\n";
                out << "minimal_states = " << minimize(d).states.size() << "\n";
                out << "monoid_is_group = " << (monoid_is_group(d) ? "true" : "false") << "\n";
            }
            return 0;
        }
        if (closure->parsed()) {
            std::vector<Machine> ms;
            for (const auto& f : files) ms.push_back(parse_machine_file(f));
            auto need = [&](std::size_t n) {
                if (ms.size() != n)
                    throw ParseError("closure --op " + closure_op + ": expected " +
                                     std::to_string(n) + " input files");
            };
            if (closure_op == "sum") {
                need(2);
                if (std::holds_alternative<Qfa>(ms[0]) && std::holds_alternative<Qfa>(ms[1])) {
                    out << serialize_machine(weighted_direct_sum(
                        std::get<Qfa>(ms[0]), std::get<Qfa>(ms[1]),
                        cli_detail::parse_complex(weight_a), cli_detail::parse_complex(weight_b)));
                } else if (std::holds_alternative<QuantumGrammar>(ms[0]) &&
                           std::holds_alternative<QuantumGrammar>(ms[1])) {
                    out << serialize_machine(
                        grammar_sum(std::get<QuantumGrammar>(ms[0]), std::get<QuantumGrammar>(ms[1])));
                } else {
                    throw ModeError("closure sum: operands must be two qfas or two grammars");
                }
            } else if (closure_op == "tensor") {
                need(2);
                if (std::holds_alternative<Qpda>(ms[0]) && std::holds_alternative<Qfa>(ms[1]))
                    out << serialize_machine(
                        tensor_with_qfa(std::get<Qpda>(ms[0]), std::get<Qfa>(ms[1])));
                else if (std::holds_alternative<Qfa>(ms[0]) && std::holds_alternative<Qfa>(ms[1]))
                    out << serialize_machine(tensor(std::get<Qfa>(ms[0]), std::get<Qfa>(ms[1])));
                else
                    throw ModeError("closure tensor: operands must be qfa x qfa or qpda x qfa");
            } else if (closure_op == "complement") {
                need(1);
                if (!std::holds_alternative<Qfa>(ms[0]))
                    throw ModeError("closure complement: operand must be a qfa");
                out << serialize_machine(complement(std::get<Qfa>(ms[0])));
            } else if (closure_op == "invhom") {
                need(1);
                if (!std::holds_alternative<Qfa>(ms[0]))
                    throw ModeError("closure invhom: operand must be a qfa");
                if (map_text.empty()) throw ParseError("closure invhom: --map required");
                std::map<Symbol, Word> h;
                for (const auto& part : cli_detail::split_word(map_text, ",")) {
                    const std::size_t eq = part.find('=');
                    if (eq == std::string::npos || eq == 0)
                        throw ParseError("closure invhom: bad --map entry '" + part + "'");
                    h[part.substr(0, eq)] = word_from_chars(part.substr(eq + 1));
                }
                out << serialize_machine(inverse_homomorphism(std::get<Qfa>(ms[0]), h));
            } else if (closure_op == "symdiff") {
                need(2);
                out << serialize_machine(symmetric_difference(std::get<QuantumGrammar>(ms[0]),
                                                              std::get<QuantumGrammar>(ms[1])));
            } else { // threeway
                need(3);
                out << serialize_machine(three_way_interference(std::get<QuantumGrammar>(ms[0]),
                                                                std::get<QuantumGrammar>(ms[1]),
                                                                std::get<QuantumGrammar>(ms[2])));
            }
            return 0;
        }
        if (demo->parsed()) {
            if (demo_name == "fibonacci") {
                const TruncatedSeries s = qfa_length_coefficients(embed_dfa(bb_forbidden_dfa()), 5);
                for (std::size_t n = 0; n < s.coeff.size(); ++n)
                    out << (n ? " " : "") << std::llround(s.coeff[n].real());
                out << "\n";
            } else if (demo_name == "measurement") {
                const CVec a{std::sqrt(3.0) / 2.0, Complex(0.0, -0.5)};
                const CVec up{1.0, 0.0}, down{0.0, 1.0};
                out << cli_detail::fmt_prob(std::norm(pair_bilinear(a, up))) << " "
                    << cli_detail::fmt_prob(std::norm(pair_bilinear(a, down))) << "\n";
            } else if (demo_name == "dyck") {
                const TruncatedSeries s = grammar_initial_series(dyck_general(), 8, 0);
                for (std::size_t n = 0; n < s.coeff.size(); n += 2)
                    out << (n ? " " : "") << std::llround(s.coeff[n].real());
                out << "\n";
            } else if (demo_name == "leq") {
                const Machine m = build_leq_qpda();
                const TruncatedSeries s = cli_detail::enumerate_coefficients(m, 10);
                for (std::size_t n = 0; n < s.coeff.size(); n += 2)
                    out << (n ? " " : "") << std::llround(s.coeff[n].real());
                out << "\n";
            } else { // symdiff
                const QuantumGrammar g = symmetric_difference(l1_grammar(), l2_grammar());
                for (const std::string w : {"", "ab", "c", "abc", "bc", "abcc"})
                    out << (w.empty() ? "eps" : w) << " "
                        << cli_detail::fmt_prob(f_of_word(g, word_from_chars(w))) << "\n";
            }
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace qag
