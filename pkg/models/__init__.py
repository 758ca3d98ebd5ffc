"""持久化与输入输出模型"""
