"""Virtual platform: content pool, interaction graphs and feed recommendation."""
from .content import ActionRecord, ContentPool, Post, PublishError, SocialGraphs, near_duplicate, publish, seed_posts
from .recommend import (
    ExposureHistory,
    FeedItem,
    ReachRule,
    RecommendationConfig,
    TrendingTracker,
    candidate_posts,
    rank,
    recommend,
    score_candidate,
    score_components,
    user_embedding,
)
