"""Posted-price market simulator for multi-resource network slicing.

An operator rents capacity-normalized resources to tenants that arrive one by
one.  Prices follow a per-resource threshold schedule: flat at the floor
price while utilization is low, then exponentially increasing so the terminal
price covers the worst case the market admits.  Tenants accept or walk away
against the posted prices alone, revealing nothing about their subscriber
base, and the achieved welfare is guaranteed to stay within a closed-form
factor of the offline optimum when resource costs are linear.
"""

from .baselines import (
    AuctionResult,
    GaParams,
    MyopicPricing,
    ga_heuristic,
    myopic_slicing,
    random_slicing,
    utility_bid_auction,
)
from .harness import ExperimentSpec, SummaryRow, TrialMetrics, aggregate, emit, run_trials
from .market import (
    CAPACITY,
    FEASIBILITY_EPS,
    MINUS_INF,
    PLUS_INF,
    Allocation,
    InfeasibleAllocationError,
    MarketError,
    MarketSetup,
    PaymentError,
    SetupError,
    conjugate,
    cost,
    is_finite,
    profit,
    social_welfare,
    utilities,
)
from .oracle import OracleError, OracleResult, adjusted_profits, lp_upper_bound, offline_exact
from .pricing import PricingSchedule, build_schedule, competitive_ratio
from .protocol import (
    FAIL,
    SKIP,
    SUCC,
    DualCertificate,
    PriceQuote,
    ProtocolError,
    RentDecision,
    SessionLedger,
    SessionResult,
    TransactionOutcome,
    TranscriptEntry,
    TranscriptSchemaError,
    mvno_init,
    mvno_settle,
    parse_transcript_jsonl,
    run_posted_price,
    run_session,
    tenant_decide,
    transcript_to_jsonl,
    transferred_data_bytes,
    validate_transcript_record,
)
from .workload import (
    GenConfig,
    Instance,
    TenantPrivate,
    Violation,
    WorkloadError,
    derive_bounds,
    generate_instance,
    generate_population,
    validate_instance,
)

__version__ = "0.1.0"
