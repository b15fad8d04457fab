"""Basic demonstration of solving, verifying and enumerating equilibria."""

# %%
# Imports, etc.
from mixed_manna import formats, oracle
from mixed_manna.solution import solve_instance
from mixed_manna.verify import check_fairness, verify_equilibrium

# %%
# One good and one bad; the solver should land on prices (1/2, -1)
with open("data/good_and_bad.txt", encoding="utf-8") as file:
    GOOD_AND_BAD = formats.parse_instance(file.read())

result = solve_instance(GOOD_AND_BAD)
print(f"{result.status.value} after {result.iterations} pivots")
assert result.equilibrium is not None
print(formats.format_equilibrium(result.equilibrium))
for entry in result.trace:
    print(entry)

# %%
# The verifier agrees, and the brute-force oracle finds the same point
print(verify_equilibrium(GOOD_AND_BAD, result.equilibrium).failures())
listing = oracle.enumerate_equilibria(GOOD_AND_BAD)
print(f"{listing.count} equilibria over {listing.configurations} configurations")

# %%
# Chores with equal budgets: several equilibria, all envy-free
with open("data/chores.txt", encoding="utf-8") as file:
    CHORES = formats.parse_instance(file.read())

chores_result = solve_instance(CHORES)
assert chores_result.equilibrium is not None
print(formats.format_equilibrium(chores_result.equilibrium, decimal=True))
print(check_fairness(CHORES, chores_result.equilibrium))
for equilibrium in oracle.enumerate_equilibria(CHORES).equilibria:
    print(formats.format_equilibrium(equilibrium))
