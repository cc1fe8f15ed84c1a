"""Tick-data replay and market-impact analytics toolkit."""

__version__ = "0.1.0"

from .book import (
    BookStructureValue,
    CancelRejected,
    InsufficientDepthError,
    LimitOrderBook,
    Trade,
    UndefinedMidError,
    classify_order,
)
from .impact import (
    EventStudyTable,
    InstitutionalTransaction,
    Subset,
    event_study,
    price_impact,
    prior_volatility,
    split_by_volume,
    trade_returns,
)
from .orderflow import (
    Action,
    ActionKind,
    CorporateAction,
    OrderEvent,
    Side,
    StockSummary,
    StreamFormatError,
    TraderType,
    parse_corporate_actions,
    parse_order_events,
    parse_stock_summaries,
    validate_stream,
    write_order_events,
)
from .replay import ReplayResult, replay_events, replay_stream
from .stats import (
    AnovaResult,
    RegressionResult,
    Significance,
    SingularDesignError,
    TTestResult,
    anova_oneway,
    ols_fit,
    regression_battery,
    standardize,
    welch_t,
)
from .synth import FlowConfig, gen_flow, gen_price_series
from .trends import (
    DailyClose,
    RatioGroup,
    TrendKind,
    TrendParams,
    TrendSegment,
    adjust_prices,
    drawup_ratio,
    ratio_group,
    segment_trends,
)

__all__ = [name for name in dir() if not name.startswith("_")]
