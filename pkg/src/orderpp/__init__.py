"""Ordered population protocols: exhaustive analysis, constructions and Parikh automata."""

__version__ = "0.1.0"

from .analysis import (  # noqa: E402
    Verdict, bscc_condensation, check_decider_at_length, check_semidecider_at_length,
    compare_oracle, explore, export_dot, language_up_to, membership, simulate_fair_run,
    stable_configs_at_length,
)
from .constructions import (  # noqa: E402
    binary_stab, combine_to_decider, compile_decider, compile_sigma2, emptiness_gadget,
    exactly_one_semidecider, handshake_transform, ordered_semidecider, rename_stab,
)
from .errors import OppError  # noqa: E402
from .popa import (  # noqa: E402
    PoPA, builtin_popa, normalform_to_popa, popa_membership, weak_unambiguity_up_to,
)
from .presburger import eval_presburger, parse_formula  # noqa: E402
from .protocol import Opinion, Pred, Protocol, Rule, load_protocol, validate_protocol  # noqa: E402
from .tm import compile_tm  # noqa: E402
from .wsts import find_reducible_pattern, pumping_m, stable_set  # noqa: E402
