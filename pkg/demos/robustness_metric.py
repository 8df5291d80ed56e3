"""
Measuring evolution robustness with PER
=======================================

A class with m versions admits m(m-1) ordered version pairs; each pair is a
transformation function someone may need one day. PER is the fraction of
those pairs reachable through the declared transformers (composition counts:
1->2 and 2->3 imply 1->3). This script reproduces the published worked
examples and the java.util package report.

Run:  python demos/robustness_metric.py
"""

from pathlib import Path

from escher import (
    EvolutionHistory,
    empty_repository,
    history_from_repository,
    parse_schema,
    parse_transformer,
    per_class,
    per_release,
    per_version,
    register_transformer,
    release,
    transitive_closure,
)
from escher.per import format_ratio, parse_history_file, render_per_report

# --- worked example 1: two versions, forward transformer only ---------------

two_versions = EvolutionHistory("BANK_ACCOUNT", 2, frozenset({(1, 2)}))
print("two versions, forward only:      PER =", format_ratio(per_class(two_versions)))
# one declared transformation out of a possible two

# --- worked example 2: five versions chained forward -------------------------

chain = EvolutionHistory("CHAIN", 5, frozenset((i, i + 1) for i in range(1, 5)))
closure = transitive_closure(chain.edges)
print(f"five-version chain: {len(chain.edges)} declared edges close to "
      f"{len(closure)} of 20 pairs -> PER = {format_ratio(per_class(chain))}")

# --- per-version restriction --------------------------------------------------

print("chain robustness seen from each version:")
for v in range(1, 6):
    print(f"  version {v}: {format_ratio(per_version(chain, v))}")

# --- the java.util package report --------------------------------------------

fixture = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "java_util.hist"
histories = parse_history_file(fixture.read_text(encoding="utf-8"))
print("\njava.util across 5 language versions (22 serializable classes):")
print(render_per_report(histories), end="")
# ArrayList sits at 0.20: only 4 of its 20 version pairs survive the Java
# serialization compatibility rules; the package averages 0.48.

# --- PER straight out of a repository ----------------------------------------

v1 = parse_schema("class COUNTER feature n: INTEGER end")
v2 = parse_schema("class COUNTER feature n: INTEGER label: STRING end")
repo = empty_repository("demo")
repo, _ = release(repo, {"COUNTER": v1})
repo, _ = release(repo, {"COUNTER": v2})  # forward stub registered automatically

history = history_from_repository(repo, "COUNTER")
print("\nCOUNTER after two releases:       PER =", format_ratio(per_class(history)))

backwards = parse_transformer("""
transform COUNTER from 2 to 1
  Result.n := oldc.n
end
""")
repo = register_transformer(repo, backwards)
history = history_from_repository(repo, "COUNTER")
print("with the backwards transformer:   PER =", format_ratio(per_class(history)))
