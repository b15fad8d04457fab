"""Reduce matching pennies to an all-bads market and read the Nash
strategies back off the equilibrium prices.  The market has 38 agents,
so the solve takes a while."""

# %%
# Imports, etc.
from mixed_manna import formats, reduction
from mixed_manna.solution import solve_instance

# %%
with open("data/matching_pennies.txt", encoding="utf-8") as file:
    GAME = formats.parse_game(file.read())

market = reduction.reduce_game_to_exchange(GAME)
print(f"{market.num_agents} agents, {market.num_items} bads")

# %%
result = solve_instance(market)
assert result.equilibrium is not None
alpha, beta = reduction.extract_strategies(result.equilibrium.prices, GAME.n)
print(alpha, beta)
print(reduction.check_well_supported(GAME, alpha, beta, eps=f"1/{GAME.n}"))

# %%
# The same market with equal budgets
fisher = reduction.exchange_to_fisher(market)
fisher_result = solve_instance(fisher)
assert fisher_result.equilibrium is not None
print(reduction.extract_strategies(fisher_result.equilibrium.prices, GAME.n))
